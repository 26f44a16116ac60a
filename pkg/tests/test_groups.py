import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from laxnet.groups import (
    GROUPS,
    SO3,
    SU2,
    UNIT_CIRCLE,
    LogBranchError,
    SpecMismatchError,
    TooFarFromGroupError,
    bracket,
    dagger,
    group_by_name,
)

ALL = [UNIT_CIRCLE, SU2, SO3]


def series_exp(x, terms=40):
    """Independent oracle: truncated exponential series."""
    out = np.eye(x.shape[-1], dtype=complex)
    term = np.eye(x.shape[-1], dtype=complex)
    for k in range(1, terms):
        term = term @ x / k
        out = out + term
    return out


def test_su2_basis_bracket_oracle():
    # halved Pauli-style generators: [e1, e2] = e3 by direct multiplication
    e1 = np.array([[1j, 0], [0, -1j]]) / 2
    e2 = np.array([[0, 1], [-1, 0]]) / 2
    e3 = np.array([[0, 1j], [1j, 0]]) / 2
    assert np.allclose(e1 @ e2 - e2 @ e1, e3)
    assert np.allclose(SU2.bracket(e1, e2), e3)


def test_bracket_antisymmetry():
    x = SU2.random_algebra(0)
    assert np.max(np.abs(SU2.bracket(x, x))) == 0.0


@pytest.mark.parametrize("spec", ALL, ids=lambda s: s.name)
def test_exp_matches_series(spec):
    for seed in range(5):
        x = spec.random_algebra(seed, scale=0.8)
        expected = series_exp(x.astype(complex))
        assert np.max(np.abs(spec.exp(x) - expected)) < 1e-13


def test_su2_exp_trace_identity():
    # exp of theta times a unit-norm halved generator has trace 2 cos(theta/2)
    e2 = np.array([[0, 1], [-1, 0]]) / 2
    for theta in (0.3, 1.2, 2.9):
        g = SU2.exp(theta * e2)
        assert np.trace(g).real == pytest.approx(2 * np.cos(theta / 2), abs=1e-12)


def test_exp_zero_is_identity():
    for spec in ALL:
        z = np.zeros((spec.matrix_dim,) * 2, dtype=spec.basis.dtype)
        assert np.allclose(spec.exp(z), spec.identity())


def test_log_identity_is_zero():
    for spec in ALL:
        assert np.max(np.abs(spec.log(spec.identity()))) == 0.0


@pytest.mark.parametrize("spec", ALL, ids=lambda s: s.name)
def test_exp_log_roundtrip(spec):
    g = spec.random_group(1, size=(50,))
    assert np.max(np.abs(spec.exp(spec.log(g)) - g)) < 1e-10


def test_log_branch_rejected():
    antipodal = -np.eye(2)
    with pytest.raises(LogBranchError):
        SU2.log(antipodal)
    rot_pi = np.diag([1.0, -1.0, -1.0])
    with pytest.raises(LogBranchError):
        SO3.log(rot_pi)
    with pytest.raises(LogBranchError):
        UNIT_CIRCLE.log(np.array([[-1.0 + 0j]]))


def test_project_group_against_polar_oracle():
    scipy_linalg = pytest.importorskip("scipy.linalg")
    rng = np.random.default_rng(4)
    for spec in (SU2, SO3):
        g = spec.random_group(5)
        noise = rng.standard_normal(g.shape) * 1e-3
        if spec.complex_entries:
            noise = noise + 1j * rng.standard_normal(g.shape) * 1e-3
        m = g + noise
        q = spec.project_group(m)
        u, _ = scipy_linalg.polar(m)
        # compare after the same determinant normalization
        if spec.name == "su2":
            u = u / np.sqrt(np.linalg.det(u))
        assert np.max(np.abs(q - u)) < 1e-9


def test_project_group_small_perturbation_and_idempotence():
    for spec in ALL:
        g = spec.random_group(7)
        assert np.max(np.abs(spec.project_group(g + 1e-9) - g)) < 1e-7
        assert np.max(np.abs(spec.project_group(g) - g)) < 1e-12


def test_project_scaled_group_element():
    g = SU2.random_group(8)
    assert np.max(np.abs(SU2.project_group(1.1 * g) - g)) < 1e-12


def test_project_too_far():
    with pytest.raises(TooFarFromGroupError):
        SU2.project_group(10.0 * SU2.random_group(9))


@pytest.mark.parametrize("spec", ALL, ids=lambda s: s.name)
def test_ad_invariance_bulk(spec):
    g = spec.random_group(10, size=(1000,))
    x = spec.random_algebra(11, size=(1000,))
    y = spec.random_algebra(12, size=(1000,))
    lhs = spec.inner(spec.Ad(g, x), spec.Ad(g, y))
    assert np.max(np.abs(lhs - spec.inner(x, y))) < 1e-12


@pytest.mark.parametrize("spec", ALL, ids=lambda s: s.name)
def test_jacobi_identity(spec):
    x, y, z = (spec.random_algebra(s, size=(200,)) for s in (13, 14, 15))
    total = (
        bracket(x, bracket(y, z))
        + bracket(y, bracket(z, x))
        + bracket(z, bracket(x, y))
    )
    assert np.max(np.abs(total)) < 1e-12


def test_inner_positive_definite():
    for spec in ALL:
        x = spec.random_algebra(16, size=(100,))
        norms = spec.inner(x, x)
        assert np.all(norms > 0)


def test_basis_orthonormal():
    for spec in ALL:
        gram = np.array(
            [[spec.inner(a, b) for b in spec.basis] for a in spec.basis]
        )
        assert np.allclose(gram, np.eye(spec.dim), atol=1e-14)


def test_vec_unvec_roundtrip_and_ad_matrix():
    for spec in ALL:
        x = spec.random_algebra(17, size=(6,))
        assert np.max(np.abs(spec.unvec(spec.vec(x)) - x)) < 1e-13
        y = spec.random_algebra(18)
        lhs = spec.vec(bracket(y, x))
        rhs = np.einsum("ij,...j->...i", spec.ad_matrix(y), spec.vec(x))
        assert np.max(np.abs(lhs - rhs)) < 1e-12


def test_random_sampling_deterministic():
    for spec in ALL:
        for seed in (0, 1, 2):
            a = spec.random_algebra(seed)
            b = spec.random_algebra(seed)
            assert np.array_equal(a, b)
            g1 = spec.random_group(seed)
            g2 = spec.random_group(seed)
            assert np.array_equal(g1, g2)


def test_algebra_membership():
    for spec in ALL:
        x = spec.random_algebra(19)
        assert spec.algebra_defect(x) < 1e-12
        g = spec.random_group(20)
        assert spec.group_defect(g) < 1e-12


def test_spec_mismatch():
    x2 = SU2.random_algebra(0)
    with pytest.raises(SpecMismatchError):
        SO3.bracket(x2, x2)


def test_group_by_name():
    assert group_by_name("SU2") is SU2
    assert set(GROUPS) == {"u1", "su2", "so3"}


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6), st.floats(0.05, 1.2))
def test_log_norm_bounded(seed, scale):
    g = SU2.random_group(seed, scale=scale)
    x = SU2.log(g)
    # largest possible rotation below the branch cut
    assert SU2.norm(x) <= np.pi * np.sqrt(2) + 1e-9
