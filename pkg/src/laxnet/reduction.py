"""Finite-dimensional model on a quiver's edges: one group element and one
algebra element per edge, carrying the vertex-group action, its interior
and boundary moment maps, a spanning-tree normal form for the interior
action, and gluing/capping surgery at the level of points.

Conventions: the cotangent bundle of the group is left-trivialized, the
vertex action is b.(a_e, x_e) = (b_t(e) a_e b_s(e)^-1, Ad_{b_s(e)} x_e),
the interior moment at v sums Ad_{a_e} x_e over incoming edges minus x_e
over outgoing ones, and the boundary moment reads Ad_{a_e} x_e at an
outgoing boundary vertex and -x_e at an incoming one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .groups import dagger
from .quiver import Quiver, SpanningTree, VertexClass

__all__ = [
    "ReductionError",
    "ShapeMismatchError",
    "MomentNotZeroError",
    "RootNotBoundaryError",
    "DiagonalMomentError",
    "CotangentPoint",
    "ReducedPoint",
    "act",
    "moment_interior",
    "moment_boundary",
    "moment_cotangent",
    "omega_cotangent",
    "symplectic_pairing",
    "pullback_check",
    "normal_form",
    "same_orbit",
    "free_parameter_count",
    "glue_points",
    "reduce_boundary",
    "point_distance",
]


class ReductionError(Exception):
    pass


class ShapeMismatchError(ReductionError):
    pass


class MomentNotZeroError(ReductionError):
    pass


class RootNotBoundaryError(ReductionError):
    pass


class DiagonalMomentError(ReductionError):
    pass


@dataclass(frozen=True)
class CotangentPoint:
    """Per edge: a group element a and an algebra element x."""

    group: object
    a: dict
    x: dict

    def edges(self):
        return sorted(self.a)

    def check_edges(self, q):
        ids = {e.id for e in q.edges}
        if set(self.a) != ids or set(self.x) != ids:
            raise ShapeMismatchError("point edge keys do not match the quiver")

    def to_dict(self):
        return {
            "group": self.group.name,
            "edges": {
                e: {"a": _matrix_to_json(self.a[e]), "x": _matrix_to_json(self.x[e])}
                for e in self.edges()
            },
        }

    @staticmethod
    def from_dict(data, group=None):
        from .groups import group_by_name

        spec = group if group is not None else group_by_name(data["group"])
        a = {}
        x = {}
        for e, rec in data["edges"].items():
            a[e] = _matrix_from_json(rec["a"], spec)
            x[e] = _matrix_from_json(rec["x"], spec)
        return CotangentPoint(spec, a, x)


@dataclass(frozen=True)
class ReducedPoint:
    """Tree-normalized point together with the tree that defines the slice."""

    point: CotangentPoint
    tree: SpanningTree


def _matrix_to_json(m):
    m = np.asarray(m, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def _matrix_from_json(rows, spec):
    m = np.array([[complex(re, im) for re, im in row] for row in rows])
    if not spec.complex_entries:
        m = np.real(m)
    return m


def act(q, b, p):
    """Vertex-group action on a point.  b maps every vertex to a group element."""
    if set(b) != set(q.vertices):
        raise ShapeMismatchError("action data must be keyed by every vertex")
    a = {}
    x = {}
    for e in q.edges:
        bs, bt = b[e.src], b[e.dst]
        a[e.id] = bt @ p.a[e.id] @ dagger(bs)
        x[e.id] = bs @ p.x[e.id] @ dagger(bs)
    return CotangentPoint(p.group, a, x)


def identity_action(q, spec):
    return {v: spec.identity() for v in q.vertices}


def moment_interior(q, p):
    """Interior moment: v -> sum_in Ad_a x - sum_out x."""
    spec = p.group
    out = {v: np.zeros((spec.matrix_dim,) * 2, dtype=spec.basis.dtype)
           for v in q.interior()}
    for e in q.edges:
        if e.dst in out:
            out[e.dst] = out[e.dst] + spec.Ad(p.a[e.id], p.x[e.id])
        if e.src in out:
            out[e.src] = out[e.src] - p.x[e.id]
    return out


def moment_interior_norm(q, p):
    nu = moment_interior(q, p)
    if not nu:
        return 0.0
    return max(float(p.group.norm(z)) for z in nu.values())


def moment_boundary(q, p):
    """Boundary moment: Ad_a x at outgoing vertices, -x at incoming ones."""
    spec = p.group
    out = {}
    for v, cls in q.classify().items():
        if cls is VertexClass.INTERIOR:
            continue
        (e,) = [e for e in q.edges if v in (e.src, e.dst)]
        if cls is VertexClass.BOUNDARY_OUT:
            out[v] = spec.Ad(p.a[e.id], p.x[e.id])
        else:
            out[v] = -p.x[e.id]
    return out


def moment_cotangent(spec, g, x):
    """Two-sided moment of a single left-trivialized pair: (Ad_g x, -x)."""
    return spec.Ad(g, x), -x


def omega_cotangent(spec, x, t1, t2):
    """Symplectic pairing of two tangent pairs (u, v) at a point with fiber x."""
    u1, v1 = t1
    u2, v2 = t2
    return float(
        spec.inner(u1, v2) - spec.inner(u2, v1) + spec.inner(x, spec.bracket(u1, u2))
    )


def symplectic_pairing(q, p, t1, t2):
    """omega_cotangent summed over the edges; t1, t2 map edge -> (u, v)."""
    return sum(
        omega_cotangent(p.group, p.x[e.id], t1[e.id], t2[e.id]) for e in q.edges
    )


def pullback_check(q, p, t1, t2, grid, moment_tol=1e-9):
    """Quadrature evaluation of the solution-space form against the closed form.

    Tangent pairs (u, v) per edge push forward along the solution built
    from p to the field tangents (Ad_c u, Ad_c (t [u, x] + v)) with
    c(t) = exp(t log a); the sampled symplectic pairing of the two
    push-forwards is returned next to the closed-form value.
    """
    from . import fields  # deferred: fields imports this module at load time

    if moment_interior_norm(q, p) > moment_tol:
        raise MomentNotZeroError("interior moment must vanish")
    spec = p.group
    t = grid.nodes()
    x0 = {}
    x1 = {}
    y0 = {}
    y1 = {}
    for e in q.edges:
        y_log = spec.log(p.a[e.id])
        c = spec.exp(t[:, None, None] * y_log)
        xe = p.x[e.id]
        for (u, v), out0, out1 in ((t1[e.id], x0, x1), (t2[e.id], y0, y1)):
            out0[e.id] = spec.Ad(c, np.broadcast_to(u, c.shape))
            fib = t[:, None, None] * spec.bracket(u, xe) + v
            out1[e.id] = spec.Ad(c, fib)
    xf = fields.EdgeField(spec, grid, x0, x1)
    yf = fields.EdgeField(spec, grid, y0, y1)
    numeric = fields.symplectic_form(xf, yf)
    closed = symplectic_pairing(q, p, t1, t2)
    return numeric, closed


def _tree_children_order(q, tree):
    """Non-root vertices in BFS order from the root (parents first)."""
    vs = list(tree.parent)
    vs.sort(key=lambda v: (tree.depth(v), v))
    return vs


def normal_form(q, tree, p, moment_tol=1e-9):
    """Tree-based slice for the interior part of the vertex action.

    Walking the tree from its (boundary) root, each interior vertex
    first reached through a tree edge gets the unique compensating group
    element that turns that edge's a into the identity; boundary
    vertices keep the identity.  Returns the normalized point and the
    witness action data.
    """
    p.check_edges(q)
    cls = q.classify()
    if cls[tree.root] is VertexClass.INTERIOR:
        raise RootNotBoundaryError("normal form needs a boundary-rooted tree")
    if moment_interior_norm(q, p) > moment_tol:
        raise MomentNotZeroError("interior moment must vanish before normalizing")
    spec = p.group
    b = {v: spec.identity() for v in q.vertices}
    for v in _tree_children_order(q, tree):
        if cls[v] is not VertexClass.INTERIOR:
            continue
        eid, parent = tree.parent[v]
        e = q.edge(eid)
        if e.dst == v:
            b[v] = b[parent] @ dagger(p.a[eid])
        else:
            b[v] = b[parent] @ p.a[eid]
    return ReducedPoint(act(q, b, p), tree), b


def point_distance(p1, p2):
    """max over edges of ||a1 - a2||_F + ||x1 - x2||_F."""
    if set(p1.a) != set(p2.a):
        raise ShapeMismatchError("points live on different edge sets")
    worst = 0.0
    for e in p1.a:
        da = np.linalg.norm(p1.a[e] - p2.a[e])
        dx = np.linalg.norm(p1.x[e] - p2.x[e])
        worst = max(worst, float(da + dx))
    return worst


def same_orbit(q, p1, p2, tree=None, tol=2e-9):
    """Witness of interior-action equivalence, or None.

    Both points are normalized with the same tree (by default rooted at
    the smallest boundary vertex); when the normal forms agree within
    tol, the composite witness b with act(q, b, p1) = p2 is returned.
    """
    if tree is None:
        boundary = q.boundary()
        if not boundary:
            raise RootNotBoundaryError("quiver has no boundary vertex to root at")
        tree = q.spanning_tree(boundary[0])
    n1, b1 = normal_form(q, tree, p1)
    n2, b2 = normal_form(q, tree, p2)
    if point_distance(n1.point, n2.point) > tol:
        return None
    return {v: dagger(b2[v]) @ b1[v] for v in q.vertices}


def free_parameter_count(q, tree, spec):
    """Number of free real coordinates left by the tree normal form.

    Group coordinates survive on edges not normalized by the tree walk;
    fiber coordinates survive on every edge minus one algebra's worth of
    interior matching per interior vertex.
    """
    cls = q.classify()
    if cls[tree.root] is VertexClass.INTERIOR:
        raise RootNotBoundaryError("normal form needs a boundary-rooted tree")
    normalized_edges = {
        eid
        for v, (eid, _) in tree.parent.items()
        if cls[v] is VertexClass.INTERIOR
    }
    n_int = len(q.interior())
    free_a = len(q.edges) - len(normalized_edges)
    free_x = len(q.edges) - n_int
    return spec.dim * (free_a + free_x)


def glue_points(q1, p1, q2, p2, match, tol=1e-8):
    """Concatenate two points along matched boundary vertices.

    Requires the diagonal moment to vanish at every matched pair:
    boundary moments of v1 and of match[v1] must cancel within tol.
    Returns (glued quiver, glued point); edge data follows the same
    deterministic renaming as the quiver gluing.
    """
    from .quiver import glue_with_maps

    p1.check_edges(q1)
    p2.check_edges(q2)
    if p1.group is not p2.group:
        raise ShapeMismatchError("points must share a group")
    lam1 = moment_boundary(q1, p1)
    lam2 = moment_boundary(q2, p2)
    spec = p1.group
    for v1, v2 in match.items():
        gap = float(spec.norm(lam1[v1] + lam2[v2]))
        if gap > tol:
            raise DiagonalMomentError(
                f"moments at {v1!r} and {v2!r} do not cancel (|sum| = {gap:.3g})"
            )
    glued, _, emap = glue_with_maps(q1, q2, match)
    a = dict(p1.a)
    x = dict(p1.x)
    for old, new in emap.items():
        a[new] = p2.a[old]
        x[new] = p2.x[old]
    return glued, CotangentPoint(spec, a, x)


def reduce_boundary(q, p, v0, tol=1e-8):
    """Cap a boundary vertex: delete its edge's data at zero boundary moment.

    Returns (new quiver, new point).  A single edge collapses to the
    empty quiver with an empty point.
    """
    p.check_edges(q)
    lam = moment_boundary(q, p)
    if v0 not in lam:
        from .quiver import NotBoundaryError

        raise NotBoundaryError(f"{v0!r} is not a boundary vertex")
    if float(p.group.norm(lam[v0])) > tol:
        raise MomentNotZeroError(f"boundary moment at {v0!r} is not zero")
    (e0,) = [e for e in q.edges if v0 in (e.src, e.dst)]
    if len(q.edges) == 1:
        return Quiver.empty(), CotangentPoint(p.group, {}, {})
    reduced = q.delete_boundary_vertex(v0)
    a = {e: m for e, m in p.a.items() if e != e0.id}
    x = {e: m for e, m in p.x.items() if e != e0.id}
    return reduced, CotangentPoint(p.group, a, x)
