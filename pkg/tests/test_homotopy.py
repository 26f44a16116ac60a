import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from laxnet import sampling as S
from laxnet.homotopy import (
    BoundaryAdjacentEdgeError,
    BoundaryMismatchError,
    ClosedComponentError,
    Contract,
    EmptyPartitionCellError,
    LoopEdgeError,
    NotInteriorEdgeError,
    NotInteriorVertexError,
    OctopusForm,
    Split,
    apply_move,
    flip_interior_edge,
    flip_moves,
    homotopic,
    is_isomorphic,
    move_from_dict,
    move_to_dict,
    normalize,
    replay,
)
from laxnet.quiver import Quiver


def four_path():
    # in -> u -> w -> out, with middle edge between two interior vertices
    return Quiver.build(
        ["i", "u", "w", "o"],
        [("a", "i", "u"), ("mid", "u", "w"), ("b", "w", "o")],
    )


def invariant_multiset(q):
    return sorted((g, m, n) for _, g, m, n in q.invariants())


def test_contract_middle_edge():
    q2, inverse = apply_move(four_path(), Contract("mid"))
    assert len(q2.interior()) == 1
    assert invariant_multiset(q2) == [(0, 1, 1)]
    assert isinstance(inverse, Split)


def test_contract_boundary_adjacent_rejected():
    with pytest.raises(NotInteriorEdgeError):
        apply_move(four_path(), Contract("a"))


def test_contract_loop_rejected():
    q = S.five_edge_quiver()
    with pytest.raises(LoopEdgeError):
        apply_move(q, Contract("l"))


def test_split_requires_interior_vertex():
    with pytest.raises(NotInteriorVertexError):
        apply_move(four_path(), Split("i", frozenset({("a", "src")})))


def test_split_rejects_empty_cells():
    q = S.pants()
    halves = frozenset({("e1", "dst"), ("e2", "dst"), ("e3", "src")})
    with pytest.raises(EmptyPartitionCellError):
        apply_move(q, Split("c", frozenset()))
    with pytest.raises(EmptyPartitionCellError):
        apply_move(q, Split("c", halves))


def test_contract_then_inverse_is_exact():
    q = four_path()
    q2, inverse = apply_move(q, Contract("mid"))
    q3, _ = apply_move(q2, inverse)
    assert q3 == q


def test_split_then_contract_isomorphic():
    q = S.pants()
    split = Split("c", frozenset({("e1", "dst")}))
    q2, inverse = apply_move(q, split)
    assert invariant_multiset(q2) == invariant_multiset(q)
    q3, _ = apply_move(q2, inverse)
    assert is_isomorphic(q3, q)


def test_flip_interior_edge_barbell():
    barbell = Quiver.build(
        ["i1", "u", "w", "o1"],
        [("a", "i1", "u"), ("mid", "u", "w"), ("b", "w", "o1"),
         ("lu", "u", "u"), ("lw", "w", "w")],
    )
    flipped = flip_interior_edge(barbell, "mid")
    e = flipped.edge("mid")
    assert (e.src, e.dst) == ("w", "u")
    assert invariant_multiset(flipped) == invariant_multiset(barbell)
    assert replay(barbell, flip_moves(barbell, "mid")) == flipped


def test_flip_leg_rejected():
    with pytest.raises(BoundaryAdjacentEdgeError):
        flip_interior_edge(S.pants(), "e1")


def test_flip_loop_via_split_contract():
    q = S.five_edge_quiver()
    moves = flip_moves(q, "l")
    assert len(moves) == 2
    result = replay(q, moves)
    assert is_isomorphic(result, q)
    assert flip_interior_edge(q, "l") == q


def test_normalize_octopus_identity_trace():
    q = S.octopus(2, 2, 1)
    (res,) = normalize(q)
    assert res.trace == ()
    assert res.form == OctopusForm(2, 2, 1)
    assert res.result == q


def test_normalize_glued_figure():
    from laxnet.quiver import glue

    q1, q2, match = S.double_pants_pair()
    (res,) = normalize(glue(q1, q2, match))
    assert res.form == OctopusForm(1, 2, 1)


def test_normalize_pants_already_normal():
    (res,) = normalize(S.pants())
    assert res.form == OctopusForm(0, 2, 1)
    assert res.trace == ()


def test_normalize_seg_is_minimal():
    (res,) = normalize(S.seg())
    assert res.form == OctopusForm(0, 1, 1)
    assert res.trace == ()
    assert res.result == S.seg()


def test_normalize_closed_component_rejected():
    loop_only = Quiver.build(["v"], [("l", "v", "v")])
    with pytest.raises(ClosedComponentError):
        normalize(loop_only)


def test_normalize_result_is_octopus_shaped():
    for seed in range(30):
        q = S.random_connected_quiver(seed + 500)
        (res,) = normalize(q)
        final = res.result
        assert len(final.interior()) <= 1
        assert invariant_multiset(final) == invariant_multiset(q)
        assert len(res.trace) <= len(q.edges)
        if res.form.n_in + res.form.n_out + 2 * res.form.genus >= 2:
            assert is_isomorphic(final, res.form.realize()) or len(final.edges) == 1


def test_homotopic_with_realization():
    q = S.five_edge_quiver()
    (res,) = normalize(q)
    realization = res.form.realize(
        in_labels=sorted(q.boundary_in()), out_labels=sorted(q.boundary_out())
    )
    assert homotopic(q, realization)


def test_homotopic_seg_vs_pants():
    seg = S.seg("i1", "o1")
    pants_relabeled = Quiver.build(
        ["i1", "x", "c", "o1"],
        [("e1", "i1", "c"), ("e2", "x", "c"), ("e3", "c", "o1")],
    )
    with pytest.raises(BoundaryMismatchError):
        homotopic(seg, pants_relabeled)
    assert not homotopic(seg, pants_relabeled, labeled=False)


def test_homotopic_after_random_moves():
    q = S.octopus(1, 2, 1)
    cur = q
    # a split followed by further normalization keeps the class
    halves = frozenset({("e_in0", "dst"), ("loop0", "src")})
    cur, _ = apply_move(cur, Split("c", halves))
    assert homotopic(q, cur)
    assert homotopic(cur, q, labeled=False)


def test_homotopic_boundary_mismatch():
    with pytest.raises(BoundaryMismatchError):
        homotopic(S.seg("a", "b"), S.seg("x", "y"))
    assert homotopic(S.seg("a", "b"), S.seg("x", "y"), labeled=False)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_moves_preserve_invariants(seed):
    q = S.random_connected_quiver(seed)
    (res,) = normalize(q)
    before = invariant_multiset(q)
    cur = q
    for mv in res.trace:
        cur, _ = apply_move(cur, mv)
        assert invariant_multiset(cur) == before


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6))
def test_inverse_roundtrip_isomorphic(seed):
    q = S.random_connected_quiver(seed)
    cls = q.classify()
    candidates = [
        e.id
        for e in q.edges
        if not e.is_loop()
        and cls[e.src].value == "interior"
        and cls[e.dst].value == "interior"
    ]
    if not candidates:
        return
    q2, inverse = apply_move(q, Contract(candidates[0]))
    q3, _ = apply_move(q2, inverse)
    assert is_isomorphic(q3, q)


def test_normalize_idempotent():
    for seed in range(10):
        q = S.random_connected_quiver(seed + 900)
        (res,) = normalize(q)
        (res2,) = normalize(res.result)
        assert res2.trace == ()
        assert res2.form == res.form


def test_octopus_realization_counts():
    form = OctopusForm(2, 3, 1)
    q = form.realize()
    assert len(q.edges) == 3 + 1 + 2
    assert len(q.vertices) == 3 + 1 + 1
    ((_, g, m, n),) = q.invariants()
    assert (g, m, n) == (2, 3, 1)


def test_octopus_disk_has_no_realization():
    with pytest.raises(ClosedComponentError):
        OctopusForm(0, 1, 0).realize()


def test_move_json_roundtrip():
    moves = [
        Contract("e"),
        Split("v", frozenset({("a", "src"), ("b", "dst")}), False, "v2", "enew"),
    ]
    for mv in moves:
        assert move_from_dict(move_to_dict(mv)) == mv


def test_is_isomorphic_negative():
    assert not is_isomorphic(S.pants(), S.seg())
    q1 = S.octopus(1, 1, 1)
    q2 = S.octopus(0, 1, 1)
    assert not is_isomorphic(q1, q2)
