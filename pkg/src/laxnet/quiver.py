"""Finite directed multigraphs with boundary classification.

A quiver here is a finite directed multigraph without isolated vertices;
loops and parallel edges are allowed.  Degree-1 vertices form the
boundary (incoming when their edge leaves them, outgoing when it enters
them), everything else is interior.  Values are immutable and all
operations are pure, so sharing across threads is safe.
"""

from __future__ import annotations

import itertools
from collections import Counter, deque
from dataclasses import dataclass
from enum import Enum
from types import MappingProxyType

__all__ = [
    "QuiverError",
    "IsolatedVertexError",
    "DanglingEdgeError",
    "DuplicateIdError",
    "DisconnectedError",
    "NotBoundaryError",
    "NotBijectionError",
    "ResultHasIsolatedVertexError",
    "VertexClass",
    "Edge",
    "Quiver",
    "SpanningTree",
    "glue",
    "glue_with_maps",
]


class QuiverError(Exception):
    """Base class for quiver failures."""


class IsolatedVertexError(QuiverError):
    pass


class DanglingEdgeError(QuiverError):
    pass


class DuplicateIdError(QuiverError):
    pass


class DisconnectedError(QuiverError):
    pass


class NotBoundaryError(QuiverError):
    pass


class NotBijectionError(QuiverError):
    pass


class ResultHasIsolatedVertexError(QuiverError):
    pass


class VertexClass(Enum):
    BOUNDARY_IN = "in"
    BOUNDARY_OUT = "out"
    INTERIOR = "interior"


@dataclass(frozen=True, order=True)
class Edge:
    id: str
    src: str
    dst: str

    def is_loop(self):
        return self.src == self.dst

    def endpoint(self, end):
        if end == "src":
            return self.src
        if end == "dst":
            return self.dst
        raise ValueError(f"edge end must be 'src' or 'dst', got {end!r}")


@dataclass(frozen=True)
class Quiver:
    """Immutable directed multigraph.  Build via Quiver.build for validation."""

    vertices: frozenset
    edges: tuple

    @staticmethod
    def build(vertices, edges):
        """Validate and construct.  edges is an iterable of Edge or (id, src, dst)."""
        vlist = list(vertices)
        if len(vlist) != len(set(vlist)):
            raise DuplicateIdError("duplicate vertex id")
        es = tuple(e if isinstance(e, Edge) else Edge(*e) for e in edges)
        ids = [e.id for e in es]
        if len(ids) != len(set(ids)):
            raise DuplicateIdError("duplicate edge id")
        vset = frozenset(vlist)
        for e in es:
            if e.src not in vset or e.dst not in vset:
                raise DanglingEdgeError(f"edge {e.id!r} references an unknown vertex")
        touched = {e.src for e in es} | {e.dst for e in es}
        for v in sorted(vset - touched):
            raise IsolatedVertexError(f"vertex {v!r} has no incident edge")
        return Quiver(vset, tuple(sorted(es)))

    @staticmethod
    def empty():
        return Quiver(frozenset(), ())

    # -- queries ---------------------------------------------------------

    def edge(self, edge_id):
        for e in self.edges:
            if e.id == edge_id:
                return e
        raise QuiverError(f"no edge {edge_id!r}")

    def has_edge(self, edge_id):
        return any(e.id == edge_id for e in self.edges)

    def degrees(self):
        """Per vertex: (in-degree, out-degree).  A loop counts once in each."""
        deg = {v: [0, 0] for v in self.vertices}
        for e in self.edges:
            deg[e.dst][0] += 1
            deg[e.src][1] += 1
        return {v: (i, o) for v, (i, o) in deg.items()}

    def classify(self):
        """Partition the vertices into boundary-in / boundary-out / interior."""
        out = {}
        for v, (din, dout) in self.degrees().items():
            if din + dout == 1:
                out[v] = VertexClass.BOUNDARY_IN if dout == 1 else VertexClass.BOUNDARY_OUT
            else:
                out[v] = VertexClass.INTERIOR
        return out

    def boundary_in(self):
        return sorted(v for v, c in self.classify().items() if c is VertexClass.BOUNDARY_IN)

    def boundary_out(self):
        return sorted(v for v, c in self.classify().items() if c is VertexClass.BOUNDARY_OUT)

    def boundary(self):
        return sorted(set(self.boundary_in()) | set(self.boundary_out()))

    def interior(self):
        return sorted(v for v, c in self.classify().items() if c is VertexClass.INTERIOR)

    def adjacency(self):
        """Undirected incidence: vertex -> sorted list of (edge, other endpoint)."""
        adj = {v: [] for v in self.vertices}
        for e in self.edges:
            adj[e.src].append((e, e.dst))
            if not e.is_loop():
                adj[e.dst].append((e, e.src))
        for v in adj:
            adj[v].sort(key=lambda pair: pair[0].id)
        return adj

    def components(self):
        """Connected components as sub-quivers, ordered by smallest vertex id."""
        adj = self.adjacency()
        seen = set()
        comps = []
        for start in sorted(self.vertices):
            if start in seen:
                continue
            queue = deque([start])
            verts = {start}
            seen.add(start)
            while queue:
                v = queue.popleft()
                for _, w in adj[v]:
                    if w not in seen:
                        seen.add(w)
                        verts.add(w)
                        queue.append(w)
            edges = tuple(e for e in self.edges if e.src in verts)
            comps.append(Quiver(frozenset(verts), edges))
        return comps

    def is_connected(self):
        return len(self.components()) <= 1

    def invariants(self):
        """Per component: (component, genus, #incoming, #outgoing)."""
        out = []
        for comp in self.components():
            g = len(comp.edges) - len(comp.vertices) + 1
            out.append((comp, g, len(comp.boundary_in()), len(comp.boundary_out())))
        return out

    def spanning_tree(self, root):
        """Deterministic BFS spanning tree of the underlying undirected graph."""
        if root not in self.vertices:
            raise QuiverError(f"unknown root vertex {root!r}")
        if not self.is_connected():
            raise DisconnectedError("spanning tree requires a connected quiver")
        adj = self.adjacency()
        parent = {}
        tree_edges = set()
        seen = {root}
        queue = deque([root])
        while queue:
            v = queue.popleft()
            for e, w in adj[v]:
                if w not in seen:
                    seen.add(w)
                    parent[w] = (e.id, v)
                    tree_edges.add(e.id)
                    queue.append(w)
        return SpanningTree(root, frozenset(tree_edges), MappingProxyType(parent))

    # -- surgery -----------------------------------------------------------

    def delete_boundary_vertex(self, v0):
        """Remove a boundary vertex together with its unique edge."""
        cls = self.classify()
        if v0 not in cls:
            raise QuiverError(f"unknown vertex {v0!r}")
        if cls[v0] is VertexClass.INTERIOR:
            raise NotBoundaryError(f"vertex {v0!r} is interior")
        (e0,) = [e for e in self.edges if v0 in (e.src, e.dst)]
        other = e0.dst if e0.src == v0 else e0.src
        deg = self.degrees()[other]
        if deg[0] + deg[1] == 1:
            raise ResultHasIsolatedVertexError(
                f"removing {v0!r} would isolate {other!r}"
            )
        return Quiver(self.vertices - {v0}, tuple(e for e in self.edges if e is not e0))

    # -- serialization -------------------------------------------------------

    def to_dict(self):
        return {
            "vertices": sorted(self.vertices),
            "edges": [
                {"id": e.id, "src": e.src, "dst": e.dst}
                for e in sorted(self.edges, key=lambda e: e.id)
            ],
        }

    @staticmethod
    def from_dict(data):
        return Quiver.build(
            data["vertices"], [(e["id"], e["src"], e["dst"]) for e in data["edges"]]
        )


@dataclass(frozen=True)
class SpanningTree:
    root: str
    edges: frozenset
    parent: object  # mapping child vertex -> (edge id, parent vertex)

    def depth(self, v):
        d = 0
        while v != self.root:
            v = self.parent[v][1]
            d += 1
        return d

    def vertices_leaves_first(self):
        """All non-root vertices ordered by decreasing depth (ties by id)."""
        vs = list(self.parent)
        vs.sort(key=lambda v: (-self.depth(v), v))
        return vs


def _fresh_name(base, taken):
    if base not in taken:
        return base
    for k in itertools.count(2):
        cand = f"{base}__{k}"
        if cand not in taken:
            return cand


def glue_with_maps(q1, q2, match):
    """Glue q2's incoming boundary onto q1's outgoing boundary.

    match maps every outgoing boundary vertex of q1 to a distinct incoming
    boundary vertex of q2.  Matched pairs merge (keeping q1's vertex id);
    remaining q2 ids are renamed with a deterministic suffix when they
    collide with q1's.  Returns (glued, vertex_map, edge_map) where the
    maps send q2's original ids to their ids in the result.
    """
    out1 = set(q1.boundary_out())
    in2 = set(q2.boundary_in())
    if set(match) != out1:
        raise NotBijectionError("match keys must be exactly the outgoing boundary of q1")
    if sorted(match.values()) != sorted(in2) or len(set(match.values())) != len(match):
        raise NotBijectionError(
            "match values must enumerate the incoming boundary of q2 exactly once"
        )
    for v1, v2 in match.items():
        if v1 not in out1:
            raise NotBoundaryError(f"{v1!r} is not an outgoing boundary vertex of q1")
        if v2 not in in2:
            raise NotBoundaryError(f"{v2!r} is not an incoming boundary vertex of q2")

    merged_of = {v2: v1 for v1, v2 in match.items()}
    vmap = {}
    taken_v = set(q1.vertices)
    for v in sorted(q2.vertices):
        if v in merged_of:
            vmap[v] = merged_of[v]
        else:
            name = _fresh_name(v, taken_v)
            vmap[v] = name
            taken_v.add(name)

    emap = {}
    taken_e = {e.id for e in q1.edges}
    for e in sorted(q2.edges, key=lambda e: e.id):
        name = _fresh_name(e.id, taken_e)
        emap[e.id] = name
        taken_e.add(name)

    vertices = set(q1.vertices) | {vmap[v] for v in q2.vertices}
    edges = list(q1.edges) + [
        Edge(emap[e.id], vmap[e.src], vmap[e.dst]) for e in q2.edges
    ]
    return Quiver.build(vertices, edges), vmap, emap


def glue(q1, q2, match):
    """Glued quiver; see glue_with_maps for the id conventions."""
    return glue_with_maps(q1, q2, match)[0]


def edge_multiset(q, vertex_map=None):
    """Counter of (src, dst) pairs, optionally relabelled; ignores edge ids."""
    if vertex_map is None:
        return Counter((e.src, e.dst) for e in q.edges)
    return Counter((vertex_map[e.src], vertex_map[e.dst]) for e in q.edges)
