"""Compact matrix group kernel: algebra/group arithmetic, exp/log, sampling.

Three groups are built in: the unit circle in C (as 1x1 matrices), SU(2)
and SO(3).  Algebra elements are anti-Hermitian matrices (skew-symmetric
for SO(3), traceless for SU(2)); group elements are unitary (orthogonal)
with unit determinant where applicable.  Each group fixes an Ad-invariant
inner product, and every tolerance quoted elsewhere in the package is
measured in the norm that inner product induces.

Elements are plain numpy arrays; all operations broadcast over leading
axes, so a sampled path of shape (N+1, n, n) goes through unchanged.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "GroupError",
    "SpecMismatchError",
    "LogBranchError",
    "TooFarFromGroupError",
    "GroupSpec",
    "UNIT_CIRCLE",
    "SU2",
    "SO3",
    "GROUPS",
    "group_by_name",
    "dagger",
    "bracket",
]


class GroupError(Exception):
    """Base class for group-kernel failures."""


class SpecMismatchError(GroupError):
    """Operands do not belong to the same group."""


class LogBranchError(GroupError):
    """Principal logarithm requested too close to the branch cut."""


class TooFarFromGroupError(GroupError):
    """Matrix is outside the projection trust region of the group."""


def dagger(m):
    """Conjugate transpose over the last two axes."""
    return np.conj(np.swapaxes(m, -1, -2))


def bracket(x, y):
    """Matrix commutator xy - yx."""
    return x @ y - y @ x


_SQ2 = np.sqrt(2.0)

_SU2_BASIS = np.array(
    [
        [[1j, 0.0], [0.0, -1j]],
        [[0.0, 1.0], [-1.0, 0.0]],
        [[0.0, 1j], [1j, 0.0]],
    ],
    dtype=complex,
) / _SQ2

_SO3_BASIS = np.array(
    [
        [[0.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, 1.0, 0.0]],
        [[0.0, 0.0, 1.0], [0.0, 0.0, 0.0], [-1.0, 0.0, 0.0]],
        [[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]],
    ],
    dtype=float,
)

_U1_BASIS = np.array([[[1j]]], dtype=complex)


def _as_rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


class GroupSpec:
    """One of the built-in compact connected matrix groups.

    The inner product is -c * Re tr(XY) with c = 1 for u(1) and su(2)
    and c = 1/2 for so(3); the listed bases are orthonormal for it.
    """

    def __init__(self, name, basis, inner_coeff, branch_gap):
        self.name = name
        self.basis = basis
        self.dim = basis.shape[0]
        self.matrix_dim = basis.shape[1]
        self.inner_coeff = inner_coeff
        self.complex_entries = np.iscomplexobj(basis)
        # distance of trace(g) from its antipodal extreme below which log is refused
        self._branch_gap = branch_gap

    def __repr__(self):
        return f"GroupSpec({self.name!r})"

    # -- metric ---------------------------------------------------------

    def inner(self, x, y):
        """Ad-invariant inner product, broadcast over leading axes."""
        tr = np.einsum("...ab,...ba->...", x, y)
        return -self.inner_coeff * tr.real

    def norm(self, x):
        return np.sqrt(np.maximum(self.inner(x, x), 0.0))

    def bracket(self, x, y):
        self._check_shape(x)
        self._check_shape(y)
        return bracket(x, y)

    def ad(self, x, y):
        return self.bracket(x, y)

    def Ad(self, g, x):
        """Conjugation g x g^-1 for a group element g."""
        return g @ x @ dagger(g)

    def identity(self, *leading):
        eye = np.eye(self.matrix_dim, dtype=self.basis.dtype)
        if not leading:
            return eye.copy()
        return np.broadcast_to(eye, (*leading, self.matrix_dim, self.matrix_dim)).copy()

    def _check_shape(self, m):
        n = self.matrix_dim
        if m.shape[-2:] != (n, n):
            raise SpecMismatchError(
                f"expected trailing shape ({n}, {n}) for group {self.name}, got {m.shape}"
            )

    # -- membership -----------------------------------------------------

    def algebra_defect(self, x):
        """Frobenius distance from the algebra (anti-Hermitian, traceless, real)."""
        return float(np.max(_frob(x - self.project_algebra(x))))

    def group_defect(self, g):
        """max of unitarity defect ||g*g - I||_F and |det g - 1|."""
        self._check_shape(g)
        gram = dagger(g) @ g - self.identity()
        defect = _frob(gram)
        if self.name != "u1":
            defect = np.maximum(defect, np.abs(np.linalg.det(g) - 1.0))
        return float(np.max(defect))

    def project_algebra(self, m):
        """Orthogonal projection of a raw matrix onto the algebra."""
        self._check_shape(m)
        if self.name == "so3":
            a = np.real(m)
            return (a - np.swapaxes(a, -1, -2)) / 2.0
        a = (m - dagger(m)) / 2.0
        if self.name == "su2":
            tr = np.einsum("...aa->...", a) / self.matrix_dim
            a = a - tr[..., None, None] * self.identity()
        return a

    # -- exp / log / projection -----------------------------------------

    def exp(self, x):
        """Group exponential, in closed form per group."""
        self._check_shape(x)
        if self.name == "u1":
            return np.exp(x)
        theta2 = np.maximum(-np.einsum("...ab,...ba->...", x, x).real / 2.0, 0.0)
        theta = np.sqrt(theta2)
        if self.name == "su2":
            c = np.cos(theta)[..., None, None]
            s = np.sinc(theta / np.pi)[..., None, None]
            return c * self.identity() + s * x
        # so3, Rodrigues with the stable (1 - cos)/theta^2 = sinc(theta/2)^2 / 2
        s = np.sinc(theta / np.pi)[..., None, None]
        k = (0.5 * np.sinc(theta / (2.0 * np.pi)) ** 2)[..., None, None]
        return self.identity() + s * x + k * (x @ x)

    def log(self, g, branch_tol=1e-6):
        """Principal logarithm.

        Raises LogBranchError when any entry's trace is within branch_tol
        of the antipodal extreme (e.g. tr = -2 for SU(2)); the caller
        must re-gauge or perturb rather than rely on a silent branch pick.
        """
        self._check_shape(g)
        if self.name == "u1":
            z = g[..., 0, 0]
            if np.min(np.abs(z + 1.0)) <= branch_tol:
                raise LogBranchError("unit-circle log within tolerance of -1")
            return (1j * np.asarray(np.angle(z)))[..., None, None].astype(complex)
        tr = np.einsum("...aa->...", g).real
        if self.name == "su2":
            gap = np.abs(tr + 2.0)
            cos_theta = np.clip(tr / 2.0, -1.0, 1.0)
        else:
            gap = np.abs(tr + 1.0)
            cos_theta = np.clip((tr - 1.0) / 2.0, -1.0, 1.0)
        if np.min(gap) <= branch_tol:
            raise LogBranchError(
                f"{self.name} log within tolerance of the antipodal branch cut"
            )
        theta = np.arccos(cos_theta)
        skew = (g - dagger(g)) / 2.0
        out = skew / np.sinc(theta / np.pi)[..., None, None]
        if self.name == "so3":
            out = np.real(out)
        return out

    def project_group(self, m, max_dist=0.5):
        """Nearest group element via the polar decomposition.

        Raises TooFarFromGroupError when a singular value of m deviates
        from 1 by more than max_dist (operator-norm trust region).
        """
        self._check_shape(m)
        if self.name == "u1":
            z = m[..., 0, 0]
            r = np.abs(z)
            if np.min(r) < 1.0 - max_dist or np.max(r) > 1.0 + max_dist:
                raise TooFarFromGroupError("1x1 matrix too far from the unit circle")
            return (z / r)[..., None, None]
        u, s, vh = np.linalg.svd(m)
        if np.max(np.abs(s - 1.0)) > max_dist:
            raise TooFarFromGroupError(
                f"singular values deviate from 1 by {np.max(np.abs(s - 1.0)):.3g}"
            )
        q = u @ vh
        if self.name == "su2":
            det = np.linalg.det(q)
            q = q / np.sqrt(det)[..., None, None]
        else:
            det = np.linalg.det(q)
            neg = det < 0
            if np.any(neg):
                u = u.copy()
                u[neg, ..., :, -1] *= -1.0
                q = u @ vh
        return q

    # -- sampling ---------------------------------------------------------

    def random_algebra(self, seed, scale=1.0, size=()):
        """Deterministic Gaussian sample projected onto the algebra."""
        rng = _as_rng(seed)
        n = self.matrix_dim
        shape = (*size, n, n)
        raw = rng.standard_normal(shape)
        if self.complex_entries:
            raw = raw + 1j * rng.standard_normal(shape)
        return self.project_algebra(scale * raw)

    def random_group(self, seed, scale=0.7, size=()):
        return self.exp(self.random_algebra(seed, scale=scale, size=size))

    # -- coordinates -------------------------------------------------------

    def vec(self, x):
        """Coordinates in the orthonormal basis, shape (..., dim)."""
        tr = np.einsum("iab,...ba->...i", self.basis, x)
        return -self.inner_coeff * tr.real

    def unvec(self, c):
        return np.einsum("...i,iab->...ab", np.asarray(c, dtype=float), self.basis)

    def ad_matrix(self, x):
        """Matrix of ad_x = [x, .] in the orthonormal basis, shape (..., dim, dim)."""
        br = x[..., None, :, :] @ self.basis - self.basis @ x[..., None, :, :]
        tr = np.einsum("iab,...jba->...ij", self.basis, br)
        return -self.inner_coeff * tr.real


def _frob(m):
    return np.sqrt(np.sum(np.abs(m) ** 2, axis=(-2, -1)))


UNIT_CIRCLE = GroupSpec("u1", _U1_BASIS, 1.0, branch_gap=1e-6)
SU2 = GroupSpec("su2", _SU2_BASIS, 1.0, branch_gap=1e-6)
SO3 = GroupSpec("so3", _SO3_BASIS, 0.5, branch_gap=1e-6)

GROUPS = {g.name: g for g in (UNIT_CIRCLE, SU2, SO3)}


def group_by_name(name):
    try:
        return GROUPS[name.lower()]
    except KeyError:
        raise GroupError(f"unknown group {name!r}; choose from {sorted(GROUPS)}") from None
