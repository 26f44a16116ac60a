"""Deterministic generators for quivers, smooth fields, gauges and points.

Everything takes an integer seed or a numpy Generator; fixed seeds give
bitwise-reproducible data.  Smooth paths are built from low-order
trigonometric polynomials and products of exponential arcs, so their
first few derivatives stay moderate and fourth-order differencing is
accurate on desk-scale grids.
"""

from __future__ import annotations

import numpy as np

from .fields import AlgebraPaths, EdgeField, GaugeNetwork
from .quiver import Quiver, VertexClass
from .reduction import CotangentPoint

__all__ = [
    "seg",
    "two_path",
    "pants",
    "double_pants_pair",
    "octopus",
    "random_connected_quiver",
    "random_algebra_path",
    "random_edge_field",
    "random_tangent_field",
    "random_lie_algebra_network",
    "random_gauge_network",
    "random_moment_zero_point",
    "five_edge_quiver",
]


def _as_rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


# -- stock quivers -----------------------------------------------------------


def seg(src="v", dst="w", edge="e"):
    return Quiver.build([src, dst], [(edge, src, dst)])


def two_path():
    return Quiver.build(["v", "c", "w"], [("e1", "v", "c"), ("e2", "c", "w")])


def pants():
    return Quiver.build(
        ["i1", "i2", "c", "o1"],
        [("e1", "i1", "c"), ("e2", "i2", "c"), ("e3", "c", "o1")],
    )


def double_pants_pair():
    """The two quivers whose gluing has invariants (1, 2, 1)."""
    q1 = Quiver.build(
        ["a1", "a2", "b", "c", "d1", "d2"],
        [
            ("p1", "a1", "b"),
            ("p2", "a2", "b"),
            ("p3", "b", "c"),
            ("p4", "c", "d1"),
            ("p5", "c", "d2"),
        ],
    )
    q2 = Quiver.build(
        ["x1", "x2", "y", "z"],
        [("r1", "x1", "y"), ("r2", "x2", "y"), ("r3", "y", "z")],
    )
    return q1, q2, {"d1": "x1", "d2": "x2"}


def octopus(genus, n_in, n_out, hub="c"):
    from .homotopy import OctopusForm

    return OctopusForm(genus, n_in, n_out).realize(hub=hub)


def five_edge_quiver():
    """Two interior vertices, a parallel pair, and a loop; five edges."""
    return Quiver.build(
        ["i0", "u", "w", "o0"],
        [
            ("a", "i0", "u"),
            ("b", "u", "w"),
            ("c", "u", "w"),
            ("d", "w", "o0"),
            ("l", "u", "u"),
        ],
    )


def random_connected_quiver(seed, max_vertices=8, min_in=1, min_out=0,
                            exact_in=None, exact_out=None):
    """Connected quiver with non-empty boundary and at most max_vertices.

    Hubs form a random tree with optional extra edges and loops; legs
    attach to random hubs.  Classification is recomputed afterwards (a
    hub left with degree one counts as boundary), and draws are rejected
    until the requested exact boundary counts, if any, are met.
    """
    rng = _as_rng(seed)
    if exact_in is not None:
        min_in = exact_in
    if exact_out is not None:
        min_out = exact_out
    while True:
        n_hubs = int(rng.integers(1, 4))
        hubs = [f"h{i}" for i in range(n_hubs)]
        edges = []
        eid = 0
        for i in range(1, n_hubs):
            j = int(rng.integers(0, i))
            pair = (hubs[j], hubs[i]) if rng.random() < 0.5 else (hubs[i], hubs[j])
            edges.append((f"t{eid}", *pair))
            eid += 1
        for _ in range(int(rng.integers(0, 3))):
            i, j = rng.integers(0, n_hubs, size=2)
            edges.append((f"x{eid}", hubs[int(i)], hubs[int(j)]))
            eid += 1
        legs_in = exact_in if exact_in is not None else int(
            rng.integers(min_in, 4)
        )
        legs_out = exact_out if exact_out is not None else int(
            rng.integers(min_out, 4)
        )
        verts = list(hubs)
        for k in range(legs_in):
            v = f"i{k}"
            verts.append(v)
            edges.append((f"li{k}", v, hubs[int(rng.integers(0, n_hubs))]))
        for k in range(legs_out):
            v = f"o{k}"
            verts.append(v)
            edges.append((f"lo{k}", hubs[int(rng.integers(0, n_hubs))], v))
        if len(verts) > max(max_vertices, legs_in + legs_out + 1) or not edges:
            continue
        q = Quiver.build(verts, edges)
        if not (q.is_connected() and q.boundary()):
            continue
        if exact_in is not None and len(q.boundary_in()) != exact_in:
            continue
        if exact_out is not None and len(q.boundary_out()) != exact_out:
            continue
        if len(q.boundary_in()) < min_in or len(q.boundary_out()) < min_out:
            continue
        return q


# -- smooth random samples -----------------------------------------------------


def _smoothstep(t):
    # quintic step: flat first and second derivatives at both ends
    return t**3 * (10.0 - 15.0 * t + 6.0 * t * t)


def _bump(t):
    # quartic bump vanishing to second order at both ends, peak value 1
    return 16.0 * (t * (1.0 - t)) ** 2


def random_algebra_path(spec, grid, seed, scale=0.7, modes=2):
    """Low-order trigonometric polynomial with algebra coefficients."""
    rng = _as_rng(seed)
    t = grid.nodes()
    out = np.broadcast_to(
        spec.random_algebra(rng, scale=scale), (grid.n + 1,) + (spec.matrix_dim,) * 2
    ).astype(spec.basis.dtype).copy()
    for j in range(1, modes + 1):
        cj = spec.random_algebra(rng, scale=scale / j**2)
        sj = spec.random_algebra(rng, scale=scale / j**2)
        out += np.cos(j * np.pi * t)[:, None, None] * cj
        out += np.sin(j * np.pi * t)[:, None, None] * sj
    return out


def random_edge_field(q, spec, grid, seed, scale=0.7):
    rng = _as_rng(seed)
    a0 = {e.id: random_algebra_path(spec, grid, rng, scale) for e in q.edges}
    a1 = {e.id: random_algebra_path(spec, grid, rng, scale) for e in q.edges}
    return EdgeField(spec, grid, a0, a1)


random_tangent_field = random_edge_field


def random_lie_algebra_network(q, spec, grid, seed, scale=0.5, based=True):
    """Vertex-matching algebra paths; zero on the boundary when based.

    Values interpolate assigned vertex values through a smoothstep and
    add an interior bump per edge, so endpoint derivatives stay tame.
    """
    rng = _as_rng(seed)
    t = grid.nodes()
    boundary = set(q.boundary())
    vertex = {}
    for v in sorted(q.vertices):
        if based and v in boundary:
            vertex[v] = np.zeros((spec.matrix_dim,) * 2, dtype=spec.basis.dtype)
        else:
            vertex[v] = spec.random_algebra(rng, scale=scale)
    sigma = _smoothstep(t)[:, None, None]
    bump = _bump(t)[:, None, None]
    values = {}
    for e in q.edges:
        xi = spec.random_algebra(rng, scale=scale)
        values[e.id] = (
            (1.0 - sigma) * vertex[e.src] + sigma * vertex[e.dst] + bump * xi
        )
    return AlgebraPaths(spec, grid, values)


def random_gauge_network(q, spec, grid, seed, scale=0.3, based=True):
    """Product-of-exponential arcs matching at vertices (trivial on the
    boundary when based)."""
    rng = _as_rng(seed)
    t = grid.nodes()
    boundary = set(q.boundary())
    vertex_log = {}
    for v in sorted(q.vertices):
        if based and v in boundary:
            vertex_log[v] = np.zeros((spec.matrix_dim,) * 2, dtype=spec.basis.dtype)
        else:
            vertex_log[v] = spec.random_algebra(rng, scale=scale)
    sigma = _smoothstep(t)[:, None, None]
    bump = _bump(t)[:, None, None]
    g = {}
    for e in q.edges:
        xi = spec.random_algebra(rng, scale=scale)
        arc_dst = spec.exp(sigma * vertex_log[e.dst])
        arc_mid = spec.exp(bump * xi)
        arc_src = spec.exp((1.0 - sigma) * vertex_log[e.src])
        g[e.id] = arc_dst @ arc_mid @ arc_src
    return GaugeNetwork(spec, grid, g)


def random_moment_zero_point(q, spec, seed, scale=0.7, tree=None, forced_x=None):
    """Random per-edge data with vanishing interior moment.

    Group entries are free; fiber entries are free on non-tree edges and
    boundary-leaf tree edges (overridable through forced_x) and solved
    leaves-to-root at the interior vertices.  The tree must be rooted at
    a boundary vertex not incident to a forced edge.
    """
    from .groups import dagger

    rng = _as_rng(seed)
    forced_x = forced_x or {}
    if tree is None:
        tree = q.spanning_tree(q.boundary()[0])
    cls = q.classify()
    a = {e.id: spec.random_group(rng, scale=scale) for e in q.edges}
    x = {}
    for e in q.edges:
        if e.id not in tree.edges:
            x[e.id] = forced_x.get(e.id, spec.random_algebra(rng, scale=scale))
    for v in tree.vertices_leaves_first():
        eid, _parent = tree.parent[v]
        e = q.edge(eid)
        if cls[v] is not VertexClass.INTERIOR:
            x[eid] = forced_x.get(eid, spec.random_algebra(rng, scale=scale))
            continue
        acc = np.zeros((spec.matrix_dim,) * 2, dtype=spec.basis.dtype)
        for f in q.edges:
            if f.id == eid:
                continue
            if f.dst == v:
                acc = acc + spec.Ad(a[f.id], x[f.id])
            if f.src == v:
                acc = acc - x[f.id]
        # interior moment at v must vanish
        if e.dst == v:
            x[eid] = -spec.Ad(dagger(a[eid]), acc)
        else:
            x[eid] = acc
    return CotangentPoint(spec, a, x)
