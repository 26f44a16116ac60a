"""Sampled connection pairs on a quiver's edges and their calculus.

An EdgeField stores, per edge, node samples of a pair (A0, A1) of
algebra-valued functions on [0, 1].  On top of that sit the flow and
matching residuals, the gauge action, parallel transport, the two maps
between fields and per-edge cotangent data, the linearized operators of
the gauge action with their adjoints, a spanning-tree solver for
first-order network ODEs, the discretized second-order vertex operator,
and Newton gauge fixing onto the orthogonal slice.

Everything is pure; per-edge work is vectorized over the node axis and
summation orders are fixed, so results do not depend on scheduling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .groups import dagger
from .numerics import Grid, fd_derivative, fd_matrix, simpson
from .quiver import Quiver, VertexClass
from .reduction import (
    CotangentPoint,
    MomentNotZeroError,
    RootNotBoundaryError,
    ShapeMismatchError,
    moment_interior_norm,
)

__all__ = [
    "FieldError",
    "NotBasedError",
    "ResidualTooLargeError",
    "NotInLieG0Error",
    "SingularSystemError",
    "NewtonDivergedError",
    "EdgeField",
    "TangentField",
    "GaugeNetwork",
    "AlgebraPaths",
    "lax_residual",
    "kirchhoff_residual",
    "gauge_transform",
    "transport",
    "phi_of_path",
    "parallel_transport",
    "moduli_coordinates",
    "synthesize_solution",
    "gauge_moment",
    "vertex_values",
    "infinitesimal_action",
    "action_adjoint",
    "pairing",
    "tangent_inner",
    "symplectic_form",
    "solve_network_ode",
    "network_residual",
    "network_kernel_matrix",
    "GaugeLaplacian",
    "assemble_gauge_laplacian",
    "solve_flat_laplacian",
    "GaugeFixResult",
    "gauge_fix_to_slice",
]


class FieldError(Exception):
    pass


class NotBasedError(FieldError):
    """A path expected to start at the identity does not."""


class ResidualTooLargeError(FieldError):
    pass


class NotInLieG0Error(FieldError):
    """Samples fail the vertex-matching / boundary-triviality conditions."""


class SingularSystemError(FieldError):
    pass


class NewtonDivergedError(FieldError):
    pass


@dataclass(frozen=True)
class EdgeField:
    """Per edge: node samples a0[e], a1[e] of shape (n+1, m, m)."""

    group: object
    grid: Grid
    a0: dict
    a1: dict

    def edges(self):
        return sorted(self.a0)

    def check_edges(self, q):
        ids = {e.id for e in q.edges}
        if set(self.a0) != ids or set(self.a1) != ids:
            raise ShapeMismatchError("field edge keys do not match the quiver")

    @staticmethod
    def zero(q, group, grid):
        n = group.matrix_dim
        shape = (grid.n + 1, n, n)
        return EdgeField(
            group,
            grid,
            {e.id: np.zeros(shape, dtype=group.basis.dtype) for e in q.edges},
            {e.id: np.zeros(shape, dtype=group.basis.dtype) for e in q.edges},
        )

    def to_dict(self):
        from .reduction import _matrix_to_json

        return {
            "group": self.group.name,
            "grid_n": self.grid.n,
            "edges": {
                e: {
                    "a0": [_matrix_to_json(m) for m in self.a0[e]],
                    "a1": [_matrix_to_json(m) for m in self.a1[e]],
                }
                for e in self.edges()
            },
        }

    @staticmethod
    def from_dict(data):
        from .groups import group_by_name
        from .reduction import _matrix_from_json

        spec = group_by_name(data["group"])
        grid = Grid(int(data["grid_n"]))
        a0 = {}
        a1 = {}
        for e, rec in data["edges"].items():
            a0[e] = np.stack([_matrix_from_json(m, spec) for m in rec["a0"]])
            a1[e] = np.stack([_matrix_from_json(m, spec) for m in rec["a1"]])
        return EdgeField(spec, grid, a0, a1)


TangentField = EdgeField


@dataclass(frozen=True)
class GaugeNetwork:
    """Per edge: node samples of a group-valued path."""

    group: object
    grid: Grid
    g: dict

    def edges(self):
        return sorted(self.g)

    @staticmethod
    def identity(q, group, grid):
        return GaugeNetwork(
            group, grid, {e.id: group.identity(grid.n + 1) for e in q.edges}
        )


@dataclass(frozen=True)
class AlgebraPaths:
    """Per edge: node samples of an algebra-valued path."""

    group: object
    grid: Grid
    values: dict

    def edges(self):
        return sorted(self.values)

    def max_norm(self):
        return max(
            (float(np.max(self.group.norm(v))) for v in self.values.values()),
            default=0.0,
        )


def field_sub(f1, f2):
    """Componentwise difference, as a tangent direction from f2 to f1."""
    return EdgeField(
        f1.group,
        f1.grid,
        {e: f1.a0[e] - f2.a0[e] for e in f1.a0},
        {e: f1.a1[e] - f2.a1[e] for e in f1.a1},
    )


# -- residuals -------------------------------------------------------------


def lax_residual(field):
    """Per edge, max node norm of d(A1)/dt + [A0, A1]."""
    spec = field.group
    h = field.grid.h
    out = {}
    for e in field.edges():
        da1 = fd_derivative(field.a1[e], h)
        r = da1 + field.a0[e] @ field.a1[e] - field.a1[e] @ field.a0[e]
        out[e] = float(np.max(spec.norm(r)))
    return out


def kirchhoff_residual(q, field):
    """Per interior vertex, norm of sum-in A1(1) minus sum-out A1(0)."""
    field.check_edges(q)
    spec = field.group
    sums = {v: np.zeros((spec.matrix_dim,) * 2, dtype=spec.basis.dtype)
            for v in q.interior()}
    for e in q.edges:
        if e.dst in sums:
            sums[e.dst] = sums[e.dst] + field.a1[e.id][-1]
        if e.src in sums:
            sums[e.src] = sums[e.src] - field.a1[e.id][0]
    return {v: float(spec.norm(m)) for v, m in sums.items()}


def gauge_moment(q, field):
    """Zero set = flow solutions with matching: (d(A1)/dt + [A0, A1],
    per interior vertex sum-out A1(0) - sum-in A1(1))."""
    field.check_edges(q)
    spec = field.group
    h = field.grid.h
    first = {}
    for e in field.edges():
        da1 = fd_derivative(field.a1[e], h)
        first[e] = da1 + field.a0[e] @ field.a1[e] - field.a1[e] @ field.a0[e]
    sums = {v: np.zeros((spec.matrix_dim,) * 2, dtype=spec.basis.dtype)
            for v in q.interior()}
    for e in q.edges:
        if e.src in sums:
            sums[e.src] = sums[e.src] + field.a1[e.id][0]
        if e.dst in sums:
            sums[e.dst] = sums[e.dst] - field.a1[e.id][-1]
    return AlgebraPaths(spec, field.grid, first), sums


# -- gauge action ------------------------------------------------------------


def gauge_transform(gauge, field):
    """(A0, A1) -> (g A0 g^-1 - g' g^-1, g A1 g^-1), g' by finite differences."""
    if set(gauge.g) != set(field.a0) or gauge.grid != field.grid:
        raise ShapeMismatchError("gauge and field shapes do not match")
    spec = field.group
    h = field.grid.h
    a0 = {}
    a1 = {}
    for e in field.edges():
        g = gauge.g[e]
        gi = dagger(g)
        dg = fd_derivative(g, h)
        a0[e] = spec.project_algebra(g @ field.a0[e] @ gi - dg @ gi)
        a1[e] = g @ field.a1[e] @ gi
    return EdgeField(spec, field.grid, a0, a1)


def gauge_product(g1, g2):
    """Nodewise product network (g1 g2)."""
    return GaugeNetwork(
        g1.group, g1.grid, {e: g1.g[e] @ g2.g[e] for e in g1.g}
    )


def is_vertex_matching(q, gauge, tol=1e-9, based=False):
    """Whether endpoint samples agree at each vertex (and are 1 on the
    boundary when based)."""
    try:
        _gauge_vertex_values(q, gauge, tol=tol, based=based)
    except NotInLieG0Error:
        return False
    return True


def _endpoint_sample(data, e, v, which):
    return data[e.id][0] if which == "src" else data[e.id][-1]


def _gauge_vertex_values(q, gauge, tol, based):
    spec = gauge.group
    eye = spec.identity()
    vals = {}
    for v in sorted(q.vertices):
        ends = []
        for e in sorted(q.edges, key=lambda e: e.id):
            if e.src == v:
                ends.append(gauge.g[e.id][0])
            if e.dst == v:
                ends.append(gauge.g[e.id][-1])
        ref = ends[0]
        for other in ends[1:]:
            if np.max(np.abs(other - ref)) > tol:
                raise NotInLieG0Error(f"gauge endpoint mismatch at vertex {v!r}")
        if based and v in set(q.boundary()) and np.max(np.abs(ref - eye)) > tol:
            raise NotInLieG0Error(f"gauge not trivial at boundary vertex {v!r}")
        vals[v] = ref
    return vals


# -- transports ---------------------------------------------------------------


def transport(group, grid, v, refine=4):
    """Solve g' + v g = 0 with g(0) = 1; returns node samples of g."""
    from .numerics import rk4_flow

    return rk4_flow(np.asarray(v), grid, refine=refine, project=group.project_group)


def phi_of_path(group, grid, g, tol=1e-9):
    """Left logarithmic derivative -g' g^-1 of a based path."""
    g = np.asarray(g)
    if np.max(np.abs(g[0] - group.identity())) > tol:
        raise NotBasedError("path must start at the identity")
    dg = fd_derivative(g, grid.h)
    return group.project_algebra(-dg @ dagger(g))


def parallel_transport(field, refine=4):
    """Per edge, the based solution of g' + A0 g = 0 (batched over edges)."""
    from .numerics import rk4_flow

    spec = field.group
    edges = field.edges()
    if not edges:
        return GaugeNetwork(spec, field.grid, {})
    stacked = np.stack([field.a0[e] for e in edges], axis=1)
    g = rk4_flow(stacked, field.grid, refine=refine, project=spec.project_group)
    return GaugeNetwork(spec, field.grid, {e: g[:, i] for i, e in enumerate(edges)})


# -- the two coordinate maps ---------------------------------------------------


def moduli_coordinates(q, field, residual_tol=1e-4, refine=4):
    """Per edge (transport endpoint, A1(0)); requires small residuals."""
    field.check_edges(q)
    worst_lax = max(lax_residual(field).values(), default=0.0)
    kir = kirchhoff_residual(q, field)
    worst_kir = max(kir.values(), default=0.0)
    if max(worst_lax, worst_kir) > residual_tol:
        raise ResidualTooLargeError(
            f"residuals (flow {worst_lax:.3g}, matching {worst_kir:.3g}) exceed "
            f"{residual_tol:.3g}"
        )
    gnet = parallel_transport(field, refine=refine)
    a = {e: gnet.g[e][-1] for e in field.edges()}
    x = {e: field.a1[e][0].copy() for e in field.edges()}
    return CotangentPoint(field.group, a, x)


def synthesize_solution(q, point, grid, moment_tol=1e-9):
    """Exact solution with prescribed transport endpoints and initial fibers.

    Per edge the path c(t) = exp(t log a_e) gives the constant connection
    A0 = -log a_e and A1(t) = Ad_{c(t)} x_e, an exact flow solution; the
    matching condition at interior vertices is the vanishing of the
    interior moment, enforced within moment_tol.
    """
    point.check_edges(q)
    if moment_interior_norm(q, point) > moment_tol:
        raise MomentNotZeroError("interior moment must vanish to synthesize")
    spec = point.group
    t = grid.nodes()
    a0 = {}
    a1 = {}
    for e in q.edges:
        y = spec.log(point.a[e.id])
        c = spec.exp(t[:, None, None] * y)
        a0[e.id] = np.broadcast_to(-y, c.shape).copy()
        a1[e.id] = spec.Ad(c, np.broadcast_to(point.x[e.id], c.shape))
    return EdgeField(spec, grid, a0, a1)


# -- linearized action and its adjoint -----------------------------------------


def vertex_values(q, paths):
    """Vertex value of an edge family, read from the smallest incident edge end."""
    out = {}
    for v in sorted(q.vertices):
        for e in sorted(q.edges, key=lambda e: e.id):
            if e.src == v:
                out[v] = paths.values[e.id][0]
                break
            if e.dst == v:
                out[v] = paths.values[e.id][-1]
                break
    return out


def check_lie_g0(q, u, tol=1e-9):
    """Raise unless u matches at vertices and vanishes on the boundary."""
    spec = u.group
    boundary = set(q.boundary())
    for v in sorted(q.vertices):
        ends = []
        for e in sorted(q.edges, key=lambda e: e.id):
            if e.src == v:
                ends.append(u.values[e.id][0])
            if e.dst == v:
                ends.append(u.values[e.id][-1])
        for other in ends[1:]:
            if float(spec.norm(other - ends[0])) > tol:
                raise NotInLieG0Error(f"endpoint mismatch at vertex {v!r}")
        if v in boundary and float(spec.norm(ends[0])) > tol:
            raise NotInLieG0Error(f"nonzero boundary value at vertex {v!r}")


def infinitesimal_action(q, field, u, tol=1e-9):
    """Directional derivative of the gauge action: ([u, A0] - u', [u, A1])."""
    field.check_edges(q)
    check_lie_g0(q, u, tol=tol)
    h = field.grid.h
    y0 = {}
    y1 = {}
    for e in field.edges():
        ue = u.values[e]
        du = fd_derivative(ue, h)
        y0[e] = ue @ field.a0[e] - field.a0[e] @ ue - du
        y1[e] = ue @ field.a1[e] - field.a1[e] @ ue
    return EdgeField(field.group, field.grid, y0, y1)


def action_adjoint(q, field, y):
    """Adjoint of the linearized action under the natural pairings.

    Returns (Y0' + [A0, Y0] + [A1, Y1] as paths, per interior vertex
    sum-out Y0(0) - sum-in Y0(1)).
    """
    field.check_edges(q)
    spec = field.group
    h = field.grid.h
    first = {}
    for e in field.edges():
        dy0 = fd_derivative(y.a0[e], h)
        first[e] = (
            dy0
            + field.a0[e] @ y.a0[e]
            - y.a0[e] @ field.a0[e]
            + field.a1[e] @ y.a1[e]
            - y.a1[e] @ field.a1[e]
        )
    sums = {v: np.zeros((spec.matrix_dim,) * 2, dtype=spec.basis.dtype)
            for v in q.interior()}
    for e in q.edges:
        if e.src in sums:
            sums[e.src] = sums[e.src] + y.a0[e.id][0]
        if e.dst in sums:
            sums[e.dst] = sums[e.dst] - y.a0[e.id][-1]
    return AlgebraPaths(spec, field.grid, first), sums


# -- pairings -------------------------------------------------------------------


def pairing(q, u, first, vertex_data):
    """<u, (Y, Z)> = integral of <u, Y> plus the interior vertex sum."""
    spec = u.group
    total = 0.0
    for e in u.edges():
        total += float(simpson(spec.inner(u.values[e], first.values[e]), u.grid))
    uv = vertex_values(q, u)
    for v in sorted(vertex_data):
        total += float(spec.inner(uv[v], vertex_data[v]))
    return total


def tangent_inner(y, z):
    """Natural inner product: integral of <Y0, Z0> + <Y1, Z1> over all edges."""
    spec = y.group
    total = 0.0
    for e in y.edges():
        total += float(
            simpson(
                spec.inner(y.a0[e], z.a0[e]) + spec.inner(y.a1[e], z.a1[e]), y.grid
            )
        )
    return total


def symplectic_form(x, y):
    """Constant two-form: integral of <X0, Y1> - <X1, Y0> over all edges."""
    spec = x.group
    total = 0.0
    for e in x.edges():
        total += float(
            simpson(
                spec.inner(x.a0[e], y.a1[e]) - spec.inner(x.a1[e], y.a0[e]), x.grid
            )
        )
    return total


# -- first-order network solver --------------------------------------------------


def required_boundary_keys(q, tree):
    """Edges that carry free data for the network solver.

    Non-tree edges carry their value at t=1; boundary-leaf edges other
    than the root's carry their value at the leaf end (t=0 at an
    incoming leaf, t=1 at an outgoing one).
    """
    cls = q.classify()
    keys = {}
    for e in q.edges:
        if e.id not in tree.edges:
            keys[e.id] = "dst"
    root_edges = [e for e in q.edges if tree.root in (e.src, e.dst)]
    for e in q.edges:
        if e.id not in tree.edges:
            continue
        for v, end in ((e.src, "src"), (e.dst, "dst")):
            if cls[v] is not VertexClass.INTERIOR and v != tree.root:
                keys[e.id] = end
    return keys


def solve_network_ode(q, tree, bmat, rhs, vertex_rhs, boundary_data, grid, dim,
                      refine=4):
    """Solve x' + B x = a on every edge with prescribed interior sums.

    The interior condition at v reads sum-out x_e(0) - sum-in x_e(1) =
    vertex_rhs[v].  boundary_data carries one value per key listed by
    required_boundary_keys (vectors (dim,) or column blocks (dim, m)).
    bmat / rhs / vertex_rhs entries may be omitted or None for zero.
    Propagation runs from the leaves of the tree toward its root; each
    per-edge linear initial value problem is integrated with RK4.
    """
    cls = q.classify()
    if cls[tree.root] is VertexClass.INTERIOR:
        raise RootNotBoundaryError("network solver needs a boundary-rooted tree")
    bmat = bmat or {}
    rhs = rhs or {}
    vertex_rhs = vertex_rhs or {}
    keys = required_boundary_keys(q, tree)
    if set(boundary_data) != set(keys):
        raise FieldError(
            f"boundary data keys {sorted(boundary_data)} do not match the "
            f"required set {sorted(keys)}"
        )
    from .numerics import rk4_linear

    ncols = None
    for val in boundary_data.values():
        val = np.asarray(val)
        if val.ndim == 2:
            ncols = val.shape[1]

    def as_cols(val):
        val = np.asarray(val, dtype=float)
        if ncols is not None and val.ndim == 1:
            val = np.repeat(val[:, None], ncols, axis=1)
        return val

    def solve_edge(e, value, end):
        return rk4_linear(
            bmat.get(e.id), rhs.get(e.id), value, grid,
            refine=refine, forward=(end == "src"),
        )

    x = {}
    for e in q.edges:
        if e.id not in tree.edges:
            x[e.id] = solve_edge(e, as_cols(boundary_data[e.id]), "dst")

    zero = np.zeros(dim) if ncols is None else np.zeros((dim, ncols))
    for v in tree.vertices_leaves_first():
        eid, _parent = tree.parent[v]
        e = q.edge(eid)
        if cls[v] is not VertexClass.INTERIOR:
            end = "src" if e.src == v else "dst"
            x[eid] = solve_edge(e, as_cols(boundary_data[eid]), end)
            continue
        acc = np.array(as_cols(vertex_rhs.get(v, zero)), dtype=float)
        for f in q.edges:
            if f.id == eid:
                continue
            if f.src == v:
                acc -= x[f.id][0]
            if f.dst == v:
                acc += x[f.id][-1]
        if e.src == v:
            x[eid] = solve_edge(e, acc, "src")
        else:
            x[eid] = solve_edge(e, -acc, "dst")
    return x


def network_residual(q, x, bmat, rhs, vertex_rhs, grid):
    """(max ODE residual by fourth-order differencing, max vertex defect)."""
    bmat = bmat or {}
    rhs = rhs or {}
    vertex_rhs = vertex_rhs or {}
    worst_ode = 0.0
    for e in q.edges:
        xe = x[e.id]
        r = fd_derivative(xe, grid.h)
        if e.id in bmat and bmat[e.id] is not None:
            r = r + np.einsum("tij,tj...->ti...", bmat[e.id], xe)
        if e.id in rhs and rhs[e.id] is not None:
            a = rhs[e.id]
            r = r - (a[..., None] if (xe.ndim == 3 and np.ndim(a) == 2) else a)
        worst_ode = max(worst_ode, float(np.max(np.abs(r))))
    worst_vertex = 0.0
    for v in q.interior():
        acc = None
        for e in q.edges:
            if e.src == v:
                acc = x[e.id][0] if acc is None else acc + x[e.id][0]
            if e.dst == v:
                acc = -x[e.id][-1] if acc is None else acc - x[e.id][-1]
        if v in vertex_rhs and vertex_rhs[v] is not None:
            b = np.asarray(vertex_rhs[v], dtype=float)
            acc = acc - (b[:, None] if (acc.ndim == 2 and b.ndim == 1) else b)
        worst_vertex = max(worst_vertex, float(np.max(np.abs(acc))))
    return worst_ode, worst_vertex


def network_kernel_matrix(q, tree, bmat, grid, dim, refine=4):
    """Stacked node values of the solutions spanned by unit boundary data.

    Columns enumerate the free data slots (one per required key and
    coordinate); the target equations are zero.  The column count equals
    (|E| - #interior) * dim, and full numerical column rank certifies
    the solver's kernel dimension.
    """
    keys = sorted(required_boundary_keys(q, tree))
    m = len(keys) * dim
    data = {}
    for i, e in enumerate(keys):
        block = np.zeros((dim, m))
        block[:, i * dim : (i + 1) * dim] = np.eye(dim)
        data[e] = block
    x = solve_network_ode(q, tree, bmat, None, None, data, grid, dim, refine=refine)
    cols = np.concatenate([x[e].reshape(-1, m) for e in sorted(x)], axis=0)
    return cols


# -- discretized second-order vertex operator --------------------------------------


class _DofLayout:
    """Interior node values per edge plus one algebra value per interior vertex."""

    def __init__(self, q, grid, spec):
        self.q = q
        self.grid = grid
        self.spec = spec
        d = spec.dim
        self.edge_ids = sorted(e.id for e in q.edges)
        self.interior = q.interior()
        off = 0
        self.edge_slice = {}
        for e in self.edge_ids:
            self.edge_slice[e] = slice(off, off + (grid.n - 1) * d)
            off += (grid.n - 1) * d
        self.vertex_slice = {}
        for v in self.interior:
            self.vertex_slice[v] = slice(off, off + d)
            off += d
        self.total = off
        self._cls = q.classify()

    def expand(self, beta):
        """DOF vector -> AlgebraPaths with endpoint values from the vertex data."""
        d = self.spec.dim
        n = self.grid.n
        vals = {}
        for eid in self.edge_ids:
            e = self.q.edge(eid)
            coords = np.zeros((n + 1, d))
            coords[1:-1] = beta[self.edge_slice[eid]].reshape(n - 1, d)
            if e.src in self.vertex_slice:
                coords[0] = beta[self.vertex_slice[e.src]]
            if e.dst in self.vertex_slice:
                coords[-1] = beta[self.vertex_slice[e.dst]]
            vals[eid] = self.spec.unvec(coords)
        return AlgebraPaths(self.spec, self.grid, vals)

    def restrict(self, first, vertex_data):
        """(paths, vertex dict) -> stacked vector over interior nodes + vertices."""
        d = self.spec.dim
        out = np.zeros(self.total)
        for eid in self.edge_ids:
            coords = self.spec.vec(first.values[eid])
            out[self.edge_slice[eid]] = coords[1:-1].reshape(-1)
        for v in self.interior:
            out[self.vertex_slice[v]] = self.spec.vec(vertex_data[v])
        return out


def _ad_block_diag(spec, samples):
    """Block-diagonal matrix of ad at each node, ((n+1)d, (n+1)d)."""
    ads = spec.ad_matrix(samples)  # (n+1, d, d)
    nn = ads.shape[0]
    d = spec.dim
    out = np.zeros((nn, d, nn, d))
    idx = np.arange(nn)
    out[idx, :, idx, :] = ads
    return out.reshape(nn * d, nn * d)


def _assemble_composite(q, grid, spec, row_field, col_field):
    """Rows of the adjoint at row_field composed with the action at col_field.

    Row blocks: interior-node values of the first component, then one
    flux block per interior vertex; columns: the DOF layout.
    """
    layout = _DofLayout(q, grid, spec)
    d = spec.dim
    n = grid.n
    dmat = np.kron(fd_matrix(grid), np.eye(d))
    mat = np.zeros((layout.total, layout.total))
    for eid in layout.edge_ids:
        e = q.edge(eid)
        if col_field is None:
            c0 = -dmat
            c1 = None
        else:
            a0blk = _ad_block_diag(spec, col_field.a0[eid])
            a1blk = _ad_block_diag(spec, col_field.a1[eid])
            c0 = -a0blk - dmat
            c1 = -a1blk
        if row_field is None:
            k_full = dmat @ c0
        else:
            r0blk = _ad_block_diag(spec, row_field.a0[eid])
            r1blk = _ad_block_diag(spec, row_field.a1[eid])
            k_full = (dmat + r0blk) @ c0
            if c1 is not None:
                k_full += r1blk @ c1
        # flux rows take endpoint VALUES of Y0 = c0 u, not derivatives
        flux_src = c0[:d, :]
        flux_dst = -c0[-d:, :]

        def scatter(rows, block):
            # local columns: node 0 | interior nodes | node n
            mat[rows, layout.edge_slice[eid]] += block[:, d : n * d]
            if e.src in layout.vertex_slice:
                mat[rows, layout.vertex_slice[e.src]] += block[:, :d]
            if e.dst in layout.vertex_slice:
                mat[rows, layout.vertex_slice[e.dst]] += block[:, -d:]

        scatter(layout.edge_slice[eid], k_full[d : n * d, :])
        if e.src in layout.vertex_slice:
            scatter(layout.vertex_slice[e.src], flux_src)
        if e.dst in layout.vertex_slice:
            scatter(layout.vertex_slice[e.dst], flux_dst)
    return mat, layout


@dataclass
class GaugeLaplacian:
    """Dense square form of the composed adjoint-after-action operator.

    Row semantics: the first component of the adjoint output collocated
    at interior nodes, then per interior vertex the flux sums
    sum-out Y0(0) - sum-in Y0(1) of Y0 = [u, A0] - u'.
    """

    q: Quiver
    grid: Grid
    group: object
    matrix: np.ndarray
    layout: _DofLayout

    def solve(self, first_rhs, vertex_rhs):
        """Solve for the paths u with the operator equal to the given data.

        first_rhs: dict edge -> (n+1, m, m) algebra samples (endpoint
        values are ignored: only interior nodes are collocated);
        vertex_rhs: dict interior vertex -> algebra element.
        """
        paths = AlgebraPaths(self.group, self.grid, first_rhs)
        rhs = self.layout.restrict(paths, vertex_rhs)
        try:
            beta = np.linalg.solve(self.matrix, rhs)
        except np.linalg.LinAlgError as exc:
            raise SingularSystemError(str(exc)) from exc
        return self.layout.expand(beta)

    def smallest_singular_value(self):
        return float(np.linalg.svd(self.matrix, compute_uv=False)[-1])


def assemble_gauge_laplacian(q, field, grid, group=None):
    """Assemble the operator at a field (None for the zero field)."""
    if field is not None:
        field.check_edges(q)
        group = field.group
        grid = field.grid
    if group is None:
        raise FieldError("group required when assembling at the zero field")
    if not q.boundary():
        raise FieldError("operator needs a quiver with boundary")
    mat, layout = _assemble_composite(q, grid, group, field, field)
    return GaugeLaplacian(q, grid, group, mat, layout)


def solve_flat_laplacian(q, grid, spec, first_rhs, vertex_rhs):
    """Constructive zero-field solve: per-edge Dirichlet problems, then the
    finite vertex system for the matching values, then reassembly.

    Solves the same discrete system as assemble_gauge_laplacian(q, None):
    collocation of -u'' at interior nodes and of the flux rows
    -sum-out u'(0) + sum-in u'(1) at interior vertices.
    """
    d = spec.dim
    n = grid.n
    dmat = fd_matrix(grid)
    dd = dmat @ dmat
    interior_block = -dd[1:-1, 1:-1]
    interior = q.interior()

    # Dirichlet solves, one RHS column per edge and algebra coordinate
    w = {}
    for e in sorted(q.edges, key=lambda e: e.id):
        coords = spec.vec(np.asarray(first_rhs[e.id]))  # (n+1, d)
        try:
            sol = np.linalg.solve(interior_block, coords[1:-1])
        except np.linalg.LinAlgError as exc:
            raise SingularSystemError(str(exc)) from exc
        full = np.zeros((n + 1, d))
        full[1:-1] = sol
        w[e.id] = full

    # vertex system M c = z with M the interior graph Laplacian
    if interior:
        m_idx = {v: i for i, v in enumerate(interior)}
        m = np.zeros((len(interior), len(interior)))
        z = np.zeros((len(interior), d))
        for v in interior:
            z[m_idx[v]] = spec.vec(vertex_rhs[v])
        for e in q.edges:
            dw0 = dmat[0] @ w[e.id]
            dwn = dmat[-1] @ w[e.id]
            if e.src in m_idx:
                z[m_idx[e.src]] += dw0
            if e.dst in m_idx:
                z[m_idx[e.dst]] -= dwn
            if e.is_loop():
                continue
            # b_e = c_dst - c_src enters flux rows as sum-in b - sum-out b
            if e.src in m_idx:
                i = m_idx[e.src]
                m[i, i] += 1.0
                if e.dst in m_idx:
                    m[i, m_idx[e.dst]] -= 1.0
            if e.dst in m_idx:
                i = m_idx[e.dst]
                m[i, i] += 1.0
                if e.src in m_idx:
                    m[i, m_idx[e.src]] -= 1.0
        try:
            c = np.linalg.solve(m, z)
        except np.linalg.LinAlgError as exc:
            raise SingularSystemError(str(exc)) from exc
    else:
        c = np.zeros((0, d))
        m_idx = {}

    t = grid.nodes()[:, None]
    out = {}
    for e in q.edges:
        c_src = c[m_idx[e.src]] if e.src in m_idx else np.zeros(d)
        c_dst = c[m_idx[e.dst]] if e.dst in m_idx else np.zeros(d)
        coords = w[e.id] + c_src[None, :] + t * (c_dst - c_src)[None, :]
        out[e.id] = spec.unvec(coords)
    return AlgebraPaths(spec, grid, out)


# -- Newton gauge fixing -------------------------------------------------------------


@dataclass
class GaugeFixResult:
    gauge: GaugeNetwork
    fixed: EdgeField  # the transformed field the iteration converged on
    iterations: int
    residual: float
    history: tuple


def slice_residual(q, base, other):
    """Norm of the adjoint applied to (other - base): max over all node
    values of the first component and all interior vertex sums."""
    first, vert = action_adjoint(q, base, field_sub(other, base))
    spec = base.group
    worst = max(
        (float(np.max(spec.norm(v))) for v in first.values.values()), default=0.0
    )
    for v in sorted(vert):
        worst = max(worst, float(spec.norm(vert[v])))
    return worst, first, vert


def gauge_fix_to_slice(q, base, target, tol=1e-8, max_iter=12, refresh=True,
                       refine=4):
    """Newton iteration for a based gauge s with the slice condition
    adjoint_at_base(s.target - base) = 0.

    The update solves the composed operator (adjoint at base, action
    linearized at the current transformed field); with refresh the
    linearization follows the iterate, giving quadratic convergence
    inside the trust region (about 0.1 from base in the C1 sup norm).
    """
    base.check_edges(q)
    target.check_edges(q)
    spec = base.group
    gauge = GaugeNetwork.identity(q, spec, base.grid)
    current = target
    frozen = None
    history = []
    for it in range(max_iter + 1):
        rnorm, first, vert = slice_residual(q, base, current)
        history.append(rnorm)
        if rnorm <= tol:
            return GaugeFixResult(gauge, it, rnorm, tuple(history))
        if it == max_iter:
            break
        if refresh:
            mat, layout = _assemble_composite(q, base.grid, spec, base, current)
        else:
            if frozen is None:
                frozen = _assemble_composite(q, base.grid, spec, base, base)
            mat, layout = frozen
        neg_first = AlgebraPaths(
            spec, base.grid, {e: -m for e, m in first.values.items()}
        )
        rhs = layout.restrict(neg_first, {v: -m for v, m in vert.items()})
        try:
            beta = np.linalg.solve(mat, rhs)
        except np.linalg.LinAlgError as exc:
            raise SingularSystemError(str(exc)) from exc
        step = layout.expand(beta)
        h = GaugeNetwork(
            spec, base.grid, {e: spec.exp(step.values[e]) for e in step.edges()}
        )
        gauge = gauge_product(h, gauge)
        current = gauge_transform(h, current)
    raise NewtonDivergedError(
        f"no convergence after {max_iter} iterations "
        f"(residuals {', '.join(f'{r:.3g}' for r in history)})"
    )
