"""Quiver moves, octopus normal forms, and the homotopy decision procedure.

Two moves generate the equivalence: contracting a non-loop edge between
two interior vertices, and the inverse split of an interior vertex.
Every connected quiver with boundary contracts down to an octopus (one
interior vertex, m in-legs, n out-legs, g loops), except for the single
edge, which admits no move at all and is kept as its own minimal form;
its invariants still read (g, m, n) = (0, 1, 1) and the decision
procedure compares invariants, so a single edge and the two-edge octopus
realization are homotopic as they induce the same cylinder.
"""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass

from .quiver import Edge, Quiver, VertexClass, edge_multiset

__all__ = [
    "MoveError",
    "NotInteriorEdgeError",
    "LoopEdgeError",
    "NotInteriorVertexError",
    "EmptyPartitionCellError",
    "BoundaryAdjacentEdgeError",
    "ClosedComponentError",
    "BoundaryMismatchError",
    "Contract",
    "Split",
    "apply_move",
    "replay",
    "flip_interior_edge",
    "flip_moves",
    "OctopusForm",
    "NormalizedComponent",
    "normalize",
    "homotopic",
    "is_isomorphic",
    "move_to_dict",
    "move_from_dict",
]


class MoveError(Exception):
    """Base class for illegal moves."""


class NotInteriorEdgeError(MoveError):
    pass


class LoopEdgeError(MoveError):
    pass


class NotInteriorVertexError(MoveError):
    pass


class EmptyPartitionCellError(MoveError):
    pass


class BoundaryAdjacentEdgeError(MoveError):
    pass


class ClosedComponentError(MoveError):
    pass


class BoundaryMismatchError(MoveError):
    pass


@dataclass(frozen=True)
class Contract:
    """Delete a non-loop edge between two interior vertices and merge them.

    The source endpoint's id survives the merge.
    """

    edge: str


@dataclass(frozen=True)
class Split:
    """Clone an interior vertex and join the copies by a fresh edge.

    moved lists the half-edges, as (edge id, "src"|"dst") pairs, that are
    reattached to the clone; both it and its complement must be
    non-empty.  edge_to_new orients the fresh edge from the original
    vertex to the clone.  new_vertex / new_edge pin the fresh ids (used
    by inverses and replayable traces); left None, deterministic fresh
    names are derived from the vertex id.
    """

    vertex: str
    moved: frozenset
    edge_to_new: bool = True
    new_vertex: str | None = None
    new_edge: str | None = None


def _incident_half_edges(q, v):
    halves = set()
    for e in q.edges:
        if e.src == v:
            halves.add((e.id, "src"))
        if e.dst == v:
            halves.add((e.id, "dst"))
    return halves


def _fresh(base, taken):
    if base not in taken:
        return base
    for k in itertools.count(2):
        cand = f"{base}__{k}"
        if cand not in taken:
            return cand


def apply_move(q, mv):
    """Apply a move, returning (result, inverse move)."""
    if isinstance(mv, Contract):
        return _apply_contract(q, mv)
    if isinstance(mv, Split):
        return _apply_split(q, mv)
    raise MoveError(f"unknown move {mv!r}")


def _apply_contract(q, mv):
    e = q.edge(mv.edge)
    if e.is_loop():
        raise LoopEdgeError(f"cannot contract loop {e.id!r}")
    cls = q.classify()
    if cls[e.src] is not VertexClass.INTERIOR or cls[e.dst] is not VertexClass.INTERIOR:
        raise NotInteriorEdgeError(f"edge {e.id!r} touches the boundary")
    keep, gone = e.src, e.dst
    moved = frozenset(
        (f.id, end)
        for f in q.edges
        if f.id != e.id
        for end in ("src", "dst")
        if f.endpoint(end) == gone
    )
    edges = []
    for f in q.edges:
        if f.id == e.id:
            continue
        src = keep if f.src == gone else f.src
        dst = keep if f.dst == gone else f.dst
        edges.append(Edge(f.id, src, dst))
    result = Quiver.build(q.vertices - {gone}, edges)
    inverse = Split(keep, moved, edge_to_new=True, new_vertex=gone, new_edge=e.id)
    return result, inverse


def _apply_split(q, mv):
    if mv.vertex not in q.vertices:
        raise MoveError(f"unknown vertex {mv.vertex!r}")
    if q.classify()[mv.vertex] is not VertexClass.INTERIOR:
        raise NotInteriorVertexError(f"vertex {mv.vertex!r} is not interior")
    halves = _incident_half_edges(q, mv.vertex)
    moved = frozenset(mv.moved)
    if not moved <= halves:
        raise MoveError("moved half-edges must be incident to the split vertex")
    if not moved or moved == halves:
        raise EmptyPartitionCellError("both partition cells must be non-empty")
    new_v = mv.new_vertex or _fresh(f"{mv.vertex}_s", q.vertices)
    if new_v in q.vertices:
        raise MoveError(f"new vertex id {new_v!r} already in use")
    new_e = mv.new_edge or _fresh(f"{mv.vertex}_e", {e.id for e in q.edges})
    if q.has_edge(new_e):
        raise MoveError(f"new edge id {new_e!r} already in use")
    edges = []
    for f in q.edges:
        src = new_v if (f.id, "src") in moved else f.src
        dst = new_v if (f.id, "dst") in moved else f.dst
        edges.append(Edge(f.id, src, dst))
    if mv.edge_to_new:
        edges.append(Edge(new_e, mv.vertex, new_v))
    else:
        edges.append(Edge(new_e, new_v, mv.vertex))
    result = Quiver.build(q.vertices | {new_v}, edges)
    return result, Contract(new_e)


def replay(q, trace):
    """Apply a sequence of moves."""
    cur = q
    for mv in trace:
        cur, _ = apply_move(cur, mv)
    return cur


def flip_moves(q, edge_id):
    """A move trace whose replay equals flip_interior_edge(q, edge_id)."""
    e = q.edge(edge_id)
    cls = q.classify()
    if cls[e.src] is not VertexClass.INTERIOR or cls[e.dst] is not VertexClass.INTERIOR:
        raise BoundaryAdjacentEdgeError(f"edge {edge_id!r} touches the boundary")
    if e.is_loop():
        # a reversed loop is the same quiver; realize it as split + contract
        aux_v = _fresh(f"{e.src}_s", q.vertices)
        aux_e = _fresh(f"{e.src}_e", {f.id for f in q.edges})
        return [
            Split(e.src, frozenset({(e.id, "dst")}), True, aux_v, aux_e),
            Contract(aux_e),
        ]
    other = frozenset(
        (f.id, end)
        for f in q.edges
        if f.id != e.id
        for end in ("src", "dst")
        if f.endpoint(end) == e.dst
    )
    return [
        Contract(e.id),
        Split(e.src, other, edge_to_new=False, new_vertex=e.dst, new_edge=e.id),
    ]


def flip_interior_edge(q, edge_id):
    """Reverse an edge whose endpoints are both interior."""
    return replay(q, flip_moves(q, edge_id))


@dataclass(frozen=True)
class OctopusForm:
    """Normal-form shape: one hub, n_in in-legs, n_out out-legs, genus loops."""

    genus: int
    n_in: int
    n_out: int

    def realize(self, in_labels=None, out_labels=None, hub="c"):
        """Canonical quiver with this shape.

        Undefined for shapes whose hub would have degree < 2 (the disk
        and the sphere have no quiver model).
        """
        if self.n_in + self.n_out + 2 * self.genus < 2:
            raise ClosedComponentError(
                f"shape {self.key()} has no quiver realization"
            )
        ins = list(in_labels) if in_labels is not None else [
            f"in{i}" for i in range(self.n_in)
        ]
        outs = list(out_labels) if out_labels is not None else [
            f"out{i}" for i in range(self.n_out)
        ]
        if len(ins) != self.n_in or len(outs) != self.n_out:
            raise ValueError("label count does not match the shape")
        edges = [(f"e_{v}", v, hub) for v in ins]
        edges += [(f"e_{v}", hub, v) for v in outs]
        edges += [(f"loop{j}", hub, hub) for j in range(self.genus)]
        return Quiver.build([hub, *ins, *outs], edges)

    def key(self):
        return (self.genus, self.n_in, self.n_out)


@dataclass(frozen=True)
class NormalizedComponent:
    component: Quiver
    form: OctopusForm
    trace: tuple
    result: Quiver  # the component after replaying the trace


def _contraction_candidates(q, cls):
    return sorted(
        e.id
        for e in q.edges
        if not e.is_loop()
        and cls[e.src] is VertexClass.INTERIOR
        and cls[e.dst] is VertexClass.INTERIOR
    )


def normalize(q):
    """Contract every component down to its octopus form.

    Returns one NormalizedComponent per connected component (ordered by
    smallest vertex id).  Components with empty boundary are rejected.
    Contractions strictly shrink the interior, so the trace has fewer
    than |E| moves.
    """
    out = []
    for comp in q.components():
        if not comp.boundary():
            raise ClosedComponentError("component has empty boundary")
        cur = comp
        trace = []
        while True:
            cls = cur.classify()
            interior = [v for v, c in cls.items() if c is VertexClass.INTERIOR]
            if len(interior) <= 1:
                break
            target = _contraction_candidates(cur, cls)[0]
            cur, _ = apply_move(cur, Contract(target))
            trace.append(Contract(target))
        (_, g, m, n), = cur.invariants()
        out.append(NormalizedComponent(comp, OctopusForm(g, m, n), tuple(trace), cur))
    return out


def _boundary_signature(q):
    return frozenset(q.boundary_in()), frozenset(q.boundary_out())


def homotopic(q1, q2, labeled=True):
    """Whether the two quivers normalize to the same octopus forms.

    In labeled mode (the default) the boundary vertex id sets must agree,
    components are matched through their boundary labels, and their
    (g, m, n) must coincide.  In unlabeled mode only the multisets of
    component invariants are compared.
    """
    comps1 = normalize(q1)
    comps2 = normalize(q2)
    if not labeled:
        return Counter(c.form.key() for c in comps1) == Counter(
            c.form.key() for c in comps2
        )
    if _boundary_signature(q1) != _boundary_signature(q2):
        raise BoundaryMismatchError("boundary vertex label sets differ")
    sig1 = {_boundary_signature(c.component): c.form.key() for c in comps1}
    sig2 = {_boundary_signature(c.component): c.form.key() for c in comps2}
    return sig1 == sig2


def _vertex_signature(q):
    cls = q.classify()
    deg = q.degrees()
    loops = Counter(e.src for e in q.edges if e.is_loop())
    return {v: (cls[v].value, deg[v], loops.get(v, 0)) for v in q.vertices}


def is_isomorphic(q1, q2):
    """Brute-force graph isomorphism with degree/class pruning.

    Boundary labels are not required to match; intended for small
    instances (about ten vertices).
    """
    if len(q1.vertices) != len(q2.vertices) or len(q1.edges) != len(q2.edges):
        return False
    sig1 = _vertex_signature(q1)
    sig2 = _vertex_signature(q2)
    if Counter(sig1.values()) != Counter(sig2.values()):
        return False
    order = sorted(q1.vertices, key=lambda v: (sig1[v], v))
    target = edge_multiset(q2)

    def extend(i, mapping, used):
        if i == len(order):
            return edge_multiset(q1, mapping) == target
        v = order[i]
        for w in sorted(q2.vertices - used):
            if sig2[w] != sig1[v]:
                continue
            mapping[v] = w
            if extend(i + 1, mapping, used | {w}):
                return True
            del mapping[v]
        return False

    return extend(0, {}, set())


def move_to_dict(mv):
    if isinstance(mv, Contract):
        return {"kind": "contract", "edge": mv.edge}
    if isinstance(mv, Split):
        return {
            "kind": "split",
            "vertex": mv.vertex,
            "moved": sorted(list(pair) for pair in mv.moved),
            "edge_to_new": mv.edge_to_new,
            "new_vertex": mv.new_vertex,
            "new_edge": mv.new_edge,
        }
    raise MoveError(f"unknown move {mv!r}")


def move_from_dict(data):
    if data["kind"] == "contract":
        return Contract(data["edge"])
    if data["kind"] == "split":
        return Split(
            data["vertex"],
            frozenset(tuple(pair) for pair in data["moved"]),
            data.get("edge_to_new", True),
            data.get("new_vertex"),
            data.get("new_edge"),
        )
    raise MoveError(f"unknown move kind {data['kind']!r}")
