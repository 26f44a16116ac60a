"""Uniform-grid discretization helpers shared by the field machinery.

One grid type serves every edge: N subintervals of [0, 1], N even and at
least 8 so composite Simpson applies.  Derivatives use fourth-order
stencils (centered inside, one-sided at the ends), quadrature is
composite Simpson, and the ODE drivers are classical RK4 on a refined
grid with cubic interpolation of the coefficient samples between nodes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "GridError",
    "Grid",
    "fd_derivative",
    "fd_matrix",
    "simpson_weights",
    "simpson",
    "rk4_flow",
    "rk4_linear",
]


class GridError(Exception):
    pass


@dataclass(frozen=True)
class Grid:
    """Nodes k/n for k = 0..n; n must be even and >= 8."""

    n: int

    def __post_init__(self):
        if self.n < 8 or self.n % 2 != 0:
            raise GridError(f"grid size must be even and >= 8, got {self.n}")

    @property
    def h(self):
        return 1.0 / self.n

    def nodes(self):
        return np.linspace(0.0, 1.0, self.n + 1)


# fourth-order first-derivative stencils, all over 12h
_END0 = np.array([-25.0, 48.0, -36.0, 16.0, -3.0])
_END1 = np.array([-3.0, -10.0, 18.0, -6.0, 1.0])
_MID = np.array([1.0, -8.0, 0.0, 8.0, -1.0])


def fd_derivative(values, h, axis=0):
    """Fourth-order finite-difference derivative along axis."""
    f = np.moveaxis(np.asarray(values), axis, 0)
    if f.shape[0] < 5:
        raise GridError("need at least 5 nodes for the fourth-order stencil")
    out = np.empty_like(f)
    out[2:-2] = (f[:-4] - 8.0 * f[1:-3] + 8.0 * f[3:-1] - f[4:]) / (12.0 * h)
    head = np.tensordot(np.stack([_END0, _END1]), f[:5], axes=(1, 0)) / (12.0 * h)
    tail = -np.tensordot(np.stack([_END1, _END0]), f[-5:][::-1], axes=(1, 0)) / (12.0 * h)
    out[0], out[1] = head[0], head[1]
    out[-2], out[-1] = tail[0], tail[1]
    return np.moveaxis(out, 0, axis)


def fd_matrix(grid):
    """Dense (n+1, n+1) matrix of fd_derivative on the grid nodes."""
    n = grid.n
    m = np.zeros((n + 1, n + 1))
    m[0, :5] = _END0
    m[1, :5] = _END1
    for k in range(2, n - 1):
        m[k, k - 2 : k + 3] = _MID
    m[n - 1, n - 4 :] = -_END1[::-1]
    m[n, n - 4 :] = -_END0[::-1]
    return m / (12.0 * grid.h)


def simpson_weights(grid):
    w = np.full(grid.n + 1, 2.0)
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    return w * (grid.h / 3.0)


def simpson(values, grid, axis=0):
    """Composite Simpson quadrature of sampled values along axis."""
    f = np.moveaxis(np.asarray(values), axis, 0)
    if f.shape[0] != grid.n + 1:
        raise GridError("sample count does not match the grid")
    w = simpson_weights(grid).reshape((grid.n + 1,) + (1,) * (f.ndim - 1))
    return np.sum(w * f, axis=0)


def _lagrange_weights(taus, offsets):
    # rows: evaluation points, cols: stencil node offsets
    w = np.empty((len(taus), len(offsets)))
    for j, p in enumerate(offsets):
        acc = np.ones_like(taus, dtype=float)
        for q in offsets:
            if q != p:
                acc *= (taus - q) / (p - q)
        w[:, j] = acc
    return w


def _substage_samples(values, refine):
    """Cubic interpolation of per-node samples at the RK4 stage points.

    values has node axis first, shape (n+1, ...).  Returns an array of
    shape (n, 2*refine + 1, ...): for each interval, the samples at
    offsets j/(2*refine) of the interval.
    """
    f = np.asarray(values)
    n = f.shape[0] - 1
    taus = np.arange(2 * refine + 1) / (2.0 * refine)
    w_first = _lagrange_weights(taus, [0, 1, 2, 3])
    w_mid = _lagrange_weights(taus + 1.0, [0, 1, 2, 3])  # stencil shifted to k-1..k+2
    w_last = _lagrange_weights(taus + 2.0, [0, 1, 2, 3])  # stencil k-2..k+1
    out = np.empty((n, len(taus)) + f.shape[1:], dtype=f.dtype)
    out[0] = np.tensordot(w_first, f[0:4], axes=(1, 0))
    for k in range(1, n - 1):
        out[k] = np.tensordot(w_mid, f[k - 1 : k + 3], axes=(1, 0))
    out[n - 1] = np.tensordot(w_last, f[n - 3 : n + 1], axes=(1, 0))
    return out


def rk4_flow(v, grid, refine=4, project=None, g0=None):
    """Integrate dg/dt = -v(t) g with g(0) = g0 (default: identity).

    v holds matrix samples with the node axis first: (n+1, ..., m, m),
    any batch axes in between.  Returns node values of g in the same
    layout.  project, when given, renormalizes g after every substep.
    """
    v = np.asarray(v)
    n = grid.n
    sub = _substage_samples(v, refine)
    delta = grid.h / refine
    if g0 is None:
        eye = np.eye(v.shape[-1], dtype=v.dtype)
        g = np.broadcast_to(eye, v.shape[1:]).copy()
    else:
        g = np.array(g0)
    out = np.empty_like(v)
    out[0] = g
    for k in range(n):
        for j in range(refine):
            v1 = sub[k, 2 * j]
            v2 = sub[k, 2 * j + 1]
            v3 = sub[k, 2 * j + 2]
            k1 = -(v1 @ g)
            k2 = -(v2 @ (g + 0.5 * delta * k1))
            k3 = -(v2 @ (g + 0.5 * delta * k2))
            k4 = -(v3 @ (g + delta * k3))
            g = g + (delta / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if project is not None:
                g = project(g)
        out[k + 1] = g
    return out


def rk4_linear(bmat, rhs, x0, grid, refine=4, forward=True):
    """Integrate dx/dt + B(t) x = a(t) from one end of [0, 1].

    bmat: (n+1, k, k) samples or None for zero; rhs: (n+1, k) or
    (n+1, k, m) samples or None; x0: value (k,) or columns (k, m) at
    t=0 (forward) or t=1.  Returns node values (n+1, k[, m]).
    """
    if not forward:
        bm = None if bmat is None else -np.asarray(bmat)[::-1]
        rh = None if rhs is None else -np.asarray(rhs)[::-1]
        y = rk4_linear(bm, rh, x0, grid, refine=refine, forward=True)
        return y[::-1].copy()

    n = grid.n
    x0 = np.asarray(x0)
    vector_in = x0.ndim == 1
    dtypes = [x0.dtype]
    if bmat is not None:
        dtypes.append(np.asarray(bmat).dtype)
    if rhs is not None:
        rhs = np.asarray(rhs)
        if rhs.ndim == 2:
            rhs = rhs[:, :, None]
        dtypes.append(rhs.dtype)
    x = x0[:, None].astype(np.result_type(*dtypes)) if vector_in else x0.astype(
        np.result_type(*dtypes)
    )
    b_sub = None if bmat is None else _substage_samples(np.asarray(bmat), refine)
    a_sub = None if rhs is None else _substage_samples(rhs, refine)

    def f(stage_k, stage_j, x):
        out = np.zeros_like(x)
        if b_sub is not None:
            out -= b_sub[stage_k, stage_j] @ x
        if a_sub is not None:
            out += a_sub[stage_k, stage_j]
        return out

    delta = grid.h / refine
    out = np.empty((n + 1,) + x.shape, dtype=x.dtype)
    out[0] = x
    for kk in range(n):
        for j in range(refine):
            k1 = f(kk, 2 * j, x)
            k2 = f(kk, 2 * j + 1, x + 0.5 * delta * k1)
            k3 = f(kk, 2 * j + 1, x + 0.5 * delta * k2)
            k4 = f(kk, 2 * j + 2, x + delta * k3)
            x = x + (delta / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out[kk + 1] = x
    return out[:, :, 0] if vector_in else out
