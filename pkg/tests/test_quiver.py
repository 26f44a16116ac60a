import itertools
import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from laxnet.quiver import (
    DanglingEdgeError,
    DisconnectedError,
    DuplicateIdError,
    Edge,
    IsolatedVertexError,
    NotBijectionError,
    NotBoundaryError,
    Quiver,
    ResultHasIsolatedVertexError,
    VertexClass,
    glue,
    glue_with_maps,
)
from laxnet import sampling as S


def all_spanning_trees(q, root):
    """Brute-force oracle: every acyclic edge subset connecting all vertices."""
    n = len(q.vertices)
    trees = []
    for combo in itertools.combinations(q.edges, n - 1):
        parent = {v: v for v in q.vertices}

        def find(v):
            while parent[v] != v:
                parent[v] = parent[parent[v]]
                v = parent[v]
            return v

        ok = True
        for e in combo:
            a, b = find(e.src), find(e.dst)
            if a == b:
                ok = False
                break
            parent[a] = b
        if ok and len({find(v) for v in q.vertices}) == 1:
            trees.append(frozenset(e.id for e in combo))
    return trees


def test_validate_minimal():
    q = Quiver.build(["v", "w"], [("e", "v", "w")])
    assert q.vertices == frozenset({"v", "w"})


def test_validate_isolated_vertex():
    with pytest.raises(IsolatedVertexError):
        Quiver.build(["u", "v", "w"], [("e", "v", "w")])


def test_validate_dangling_edge():
    with pytest.raises(DanglingEdgeError):
        Quiver.build(["v", "w"], [("e", "v", "zzz")])


def test_validate_duplicate_ids():
    with pytest.raises(DuplicateIdError):
        Quiver.build(["v", "w"], [("e", "v", "w"), ("e", "w", "v")])
    with pytest.raises(DuplicateIdError):
        Quiver.build(["v", "v", "w"], [("e", "v", "w")])


def test_classify_seg():
    q = S.seg()
    cls = q.classify()
    assert cls["v"] is VertexClass.BOUNDARY_IN
    assert cls["w"] is VertexClass.BOUNDARY_OUT


def test_classify_pants_figure():
    cls = S.pants().classify()
    assert [cls[v] for v in ("i1", "i2")] == [VertexClass.BOUNDARY_IN] * 2
    assert cls["c"] is VertexClass.INTERIOR
    assert cls["o1"] is VertexClass.BOUNDARY_OUT


def test_classify_loop_vertex_interior():
    q = Quiver.build(["v"], [("l", "v", "v")])
    assert q.classify()["v"] is VertexClass.INTERIOR


def test_classify_partitions_vertices():
    for seed in range(20):
        q = S.random_connected_quiver(seed)
        cls = q.classify()
        assert set(cls) == set(q.vertices)
        assert set(q.boundary_in()) | set(q.boundary_out()) | set(q.interior()) == set(
            q.vertices
        )


def test_invariants_seg():
    ((_, g, m, n),) = S.seg().invariants()
    assert (g, m, n) == (0, 1, 1)


def test_invariants_pants_figure():
    ((_, g, m, n),) = S.pants().invariants()
    assert (g, m, n) == (0, 2, 1)


def test_invariants_octopus():
    for genus, m, n in [(0, 2, 1), (3, 1, 2), (2, 2, 2)]:
        ((_, g2, m2, n2),) = S.octopus(genus, m, n).invariants()
        assert (g2, m2, n2) == (genus, m, n)


def test_spanning_tree_seg():
    tree = S.seg().spanning_tree("v")
    assert tree.edges == frozenset({"e"})


def test_spanning_tree_pants_whole_graph():
    tree = S.pants().spanning_tree("i1")
    assert len(tree.edges) == 3  # tree is the entire graph


def test_spanning_tree_theta_against_enumeration():
    q = Quiver.build(
        ["i", "u", "w", "o"],
        [("leg1", "i", "u"), ("par1", "u", "w"), ("par2", "u", "w"), ("leg2", "w", "o")],
    )
    oracle = all_spanning_trees(q, "i")
    assert len(oracle) == 2  # exactly one of the parallel edges each
    tree = q.spanning_tree("i")
    assert tree.edges in oracle


def test_spanning_tree_size_and_acyclicity():
    for seed in range(25):
        q = S.random_connected_quiver(seed + 100)
        root = q.boundary()[0]
        tree = q.spanning_tree(root)
        assert len(tree.edges) == len(q.vertices) - 1
        # union-find acyclicity
        parent = {v: v for v in q.vertices}

        def find(v):
            while parent[v] != v:
                parent[v] = parent[parent[v]]
                v = parent[v]
            return v

        for e in q.edges:
            if e.id in tree.edges:
                a, b = find(e.src), find(e.dst)
                assert a != b
                parent[a] = b


def test_spanning_tree_disconnected():
    q = Quiver.build(
        ["a", "b", "c", "d"], [("e1", "a", "b"), ("e2", "c", "d")]
    )
    with pytest.raises(DisconnectedError):
        q.spanning_tree("a")


def test_glue_figure_counts():
    q1, q2, match = S.double_pants_pair()
    glued = glue(q1, q2, match)
    assert len(glued.vertices) == 8
    assert len(glued.edges) == 8
    ((_, g, m, n),) = glued.invariants()
    assert (g, m, n) == (1, 2, 1)


def test_glue_segs_to_path():
    g = glue(S.seg("a", "b", "e1"), S.seg("c", "d", "e2"), {"b": "c"})
    assert len(g.vertices) == 3 and len(g.edges) == 2
    assert g.classify()["b"] is VertexClass.INTERIOR


def test_glue_not_bijection():
    q1, q2, _ = S.double_pants_pair()
    with pytest.raises(NotBijectionError):
        glue(q1, q2, {"d1": "x1"})
    with pytest.raises(NotBijectionError):
        glue(q1, q2, {"d1": "x1", "d2": "x1"})


def test_glue_merged_vertices_not_boundary():
    q1, q2, match = S.double_pants_pair()
    glued = glue(q1, q2, match)
    with pytest.raises(NotBoundaryError):
        glued.delete_boundary_vertex("d1")


def test_glue_id_collisions_renamed():
    q1 = S.seg("a", "b", "e")
    q2 = S.seg("a", "c", "e")  # clashes with q1's ids
    glued, vmap, emap = glue_with_maps(q1, q2, {"b": "a"})
    assert vmap["a"] == "b"  # merged pair keeps q1's vertex id
    assert emap["e"] != "e"
    assert len(glued.edges) == 2


def test_delete_boundary_vertex_pants():
    q = S.pants().delete_boundary_vertex("o1")
    assert len(q.edges) == 2
    assert q.classify()["c"] is VertexClass.INTERIOR  # degree dropped to 2
    ((_, g, m, n),) = q.invariants()
    assert (g, m, n) == (0, 2, 0)


def test_delete_boundary_vertex_seg_degenerates():
    with pytest.raises(ResultHasIsolatedVertexError):
        S.seg().delete_boundary_vertex("w")


def test_delete_boundary_vertex_octopus():
    q = S.octopus(1, 2, 2)
    q2 = q.delete_boundary_vertex(q.boundary_out()[0])
    ((_, g, m, n),) = q2.invariants()
    assert (g, m, n) == (1, 2, 1)


def test_delete_interior_rejected():
    with pytest.raises(NotBoundaryError):
        S.pants().delete_boundary_vertex("c")


def test_components():
    q = S.pants()
    assert q.components() == [q]
    two = Quiver.build(
        ["a", "b", "c", "d"], [("e1", "a", "b"), ("e2", "c", "d")]
    )
    comps = two.components()
    assert len(comps) == 2
    assert Quiver.empty().components() == []
    assert Quiver.empty().invariants() == []


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_glue_invariant_additivity(seed):
    q1 = S.random_connected_quiver(seed, min_in=1, min_out=1)
    n1 = len(q1.boundary_out())
    q2 = S.random_connected_quiver(seed + 1, exact_in=n1)
    match = dict(zip(q1.boundary_out(), q2.boundary_in()))
    glued = glue(q1, q2, match)
    ((_, g1, m1, _),) = q1.invariants()
    ((_, g2, _, n2),) = q2.invariants()
    ((_, g, m, n),) = glued.invariants()
    assert g == g1 + g2 + n1 - 1
    assert m == m1
    assert n == n2


def test_json_roundtrip_and_determinism():
    q = S.five_edge_quiver()
    d1 = q.to_dict()
    q2 = Quiver.from_dict(d1)
    assert q2 == q
    assert json.dumps(d1, sort_keys=True) == json.dumps(q2.to_dict(), sort_keys=True)
    assert d1["vertices"] == sorted(d1["vertices"])


def test_edge_endpoint_helper():
    e = Edge("e", "a", "b")
    assert e.endpoint("src") == "a" and e.endpoint("dst") == "b"
    with pytest.raises(ValueError):
        e.endpoint("mid")
