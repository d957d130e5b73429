"""Grids, fourth-order stencils, RK4 stepping, quadrature, and eigenvalue
bisection for symmetric tridiagonal / banded matrices.

Everything here is tier-generic: sampled profiles may be float64 arrays or
DoubleDouble arrays, and the same code path serves both.  Spatial
conventions: profiles live on the uniform half-line grid x_i = i*dx with
even reflection across x = 0 (ghost values u[-k] = u[k]), and the two
outermost points of any derivative are pinned to zero — with the domain
sized so that no signal reaches them, this outer closure is exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import xprec as xp


class GridError(ValueError):
    """Grid does not satisfy a sizing precondition."""


@dataclass(frozen=True)
class GridSpec:
    """Uniform half-line grid x_i = i*dx, i = 0..n_points-1."""

    dx: float
    n_points: int

    def __post_init__(self):
        if not self.dx > 0:
            raise GridError(f"dx must be positive, got {self.dx}")
        if self.n_points < 7:
            raise GridError(
                f"n_points must be >= 7 for the 5-point stencil, got {self.n_points}")

    @property
    def x_max(self) -> float:
        return self.dx * (self.n_points - 1)

    def x(self) -> np.ndarray:
        return np.arange(self.n_points) * self.dx

    @classmethod
    def from_extent(cls, dx: float, x_max: float) -> "GridSpec":
        return cls(dx, int(round(x_max / dx)) + 1)


@dataclass(frozen=True)
class ProfileFn:
    """A real function of x >= 0 with even parity, callable or pre-sampled."""

    fn: Callable[[np.ndarray], np.ndarray] | np.ndarray
    parity: str = "even"

    def sample(self, grid: GridSpec) -> np.ndarray:
        if callable(self.fn):
            return np.asarray(self.fn(grid.x()), dtype=np.float64)
        values = np.asarray(self.fn, dtype=np.float64)
        if values.shape != (grid.n_points,):
            raise GridError(
                f"sampled profile has {values.shape[0]} points, grid wants {grid.n_points}")
        return values


# ---------------------------------------------------------------------------
# Finite-difference stencils (4th order, even reflection at x=0, zero-pinned
# outer edge)
# ---------------------------------------------------------------------------

def second_derivative(u, grid: GridSpec):
    """d2u/dx2 via the 5-point stencil; ghost points by even reflection."""
    n = grid.n_points
    if _length(u) != n:
        raise GridError(f"profile has {_length(u)} samples, grid wants {n}")
    c = 1.0 / (12.0 * grid.dx * grid.dx)
    # even reflection folds u[-1] -> u[1], u[-2] -> u[2]
    row0 = (-30.0 * u[0:1] + 32.0 * u[1:2] - 2.0 * u[2:3]) * c
    row1 = (16.0 * u[0:1] - 31.0 * u[1:2] + 16.0 * u[2:3] - u[3:4]) * c
    interior = (-u[0:n - 4] + 16.0 * u[1:n - 3] - 30.0 * u[2:n - 2]
                + 16.0 * u[3:n - 1] - u[4:n]) * c
    return xp.concat([row0, row1, interior, xp.zeros_like_prefix(u, 2)])


def first_derivative(u, grid: GridSpec):
    """du/dx via the centered 4th-order stencil; even reflection at x=0."""
    n = grid.n_points
    if _length(u) != n:
        raise GridError(f"profile has {_length(u)} samples, grid wants {n}")
    c = 1.0 / (12.0 * grid.dx)
    # u'(0) = 0 exactly for even data
    row0 = (u[0:1] - u[0:1]) * c
    row1 = (u[1:2] - 8.0 * u[0:1] + 8.0 * u[2:3] - u[3:4]) * c
    interior = (u[0:n - 4] - 8.0 * u[1:n - 3] + 8.0 * u[3:n - 1] - u[4:n]) * c
    return xp.concat([row0, row1, interior, xp.zeros_like_prefix(u, 2)])


def _length(u) -> int:
    return np.shape(u.hi)[0] if isinstance(u, xp.DoubleDouble) else np.shape(u)[0]


# ---------------------------------------------------------------------------
# Quadrature
# ---------------------------------------------------------------------------

def quadrature(f, grid: GridSpec):
    """Integral of a sampled profile over [0, x_max].

    Composite Simpson on the even panels; if the point count is even the
    last panel is closed with a trapezoid.  Returns a value in the tier of
    the input.
    """
    n = _length(f)
    if n != grid.n_points:
        raise GridError(f"profile has {n} samples, grid wants {grid.n_points}")
    dx = grid.dx
    if n % 2 == 1:
        w = _simpson_weights(n)
        return xp.total(f * w) * (dx / 3.0)
    w = _simpson_weights(n - 1)
    core = xp.total(f[:n - 1] * w) * (dx / 3.0)
    return core + xp.total(f[n - 2:n]) * (0.5 * dx)


def _simpson_weights(n: int) -> np.ndarray:
    w = np.full(n, 2.0)
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    return w


def inner_product(f, g, grid: GridSpec):
    """Plain L2 inner product on [0, x_max] by the same quadrature."""
    return quadrature(f * g, grid)


# ---------------------------------------------------------------------------
# RK4
# ---------------------------------------------------------------------------

def rk4_step(y, rhs, dt: float, t: float = 0.0):
    """One classical RK4 step for y' = rhs(y, t) on a pair (u, v)."""
    u, v = y
    k1u, k1v = rhs((u, v), t)
    h2 = 0.5 * dt
    k2u, k2v = rhs((u + h2 * k1u, v + h2 * k1v), t + h2)
    k3u, k3v = rhs((u + h2 * k2u, v + h2 * k2v), t + h2)
    k4u, k4v = rhs((u + dt * k3u, v + dt * k3v), t + dt)
    c = dt / 6.0
    return (u + c * (k1u + 2.0 * k2u + 2.0 * k3u + k4u),
            v + c * (k1v + 2.0 * k2v + 2.0 * k3v + k4v))


# ---------------------------------------------------------------------------
# Outward profile integration for the linearized operator
# ---------------------------------------------------------------------------

OVERFLOW_GUARD = 1e250


@dataclass
class ProfileResult:
    """Radial profile from outward ODE integration."""

    values: np.ndarray
    truncated: bool
    n_valid: int
    end_slope: float  # dv/dx at the last valid grid point


def ode_profile_integrate(alpha: float, lam: float, grid: GridSpec,
                          init_value: float = 1.0,
                          max_step: float = 1e-3) -> ProfileResult:
    """Integrate v'' = (V(x) + lam^2) v outward from v(0)=init, v'(0)=0.

    V is the sech-squared linearization potential for power ``alpha``.  RK4
    with substeps of at most min(dx, max_step); realizes generalized
    eigenfunctions (notably the continuum-edge mode at lam = 0) without any
    hypergeometric machinery.  Exponentially growing solutions are truncated
    at the overflow guard and flagged.
    """
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    dx = grid.dx
    n_sub = max(1, int(np.ceil(dx / max_step)))
    h = dx / n_sub
    lam2 = lam * lam
    vcoef = -(2.0 * alpha + 1.0) * (alpha + 1.0)

    def deriv(y, x):
        v, w = y
        sech = 1.0 / np.cosh(alpha * x)
        return (w, (vcoef * sech * sech + lam2) * v)

    out = np.empty(grid.n_points)
    out[0] = init_value
    y = (init_value, 0.0)
    x = 0.0
    n_valid = grid.n_points
    truncated = False
    for i in range(1, grid.n_points):
        for _ in range(n_sub):
            y = rk4_step(y, deriv, h, x)
            x += h
        out[i] = y[0]
        if abs(y[0]) > OVERFLOW_GUARD:
            out[i + 1:] = np.nan
            n_valid = i + 1
            truncated = True
            break
    return ProfileResult(out, truncated, n_valid, float(y[1]))


# ---------------------------------------------------------------------------
# Eigenvalues of symmetric tridiagonal / banded matrices via inertia-count
# bisection.  count(sigma) = number of eigenvalues below sigma equals the
# number of negative pivots in the LDL^T factorization of A - sigma*I, which
# for narrow bands is a short recurrence.  The shift dimension is vectorized
# so one sweep refines every requested eigenvalue at once.
# ---------------------------------------------------------------------------

_PIVOT_FLOOR = 1e-300


def _sturm_counts_tridiagonal(diag, off, shifts):
    d = diag[0] - shifts
    count = (d < 0).astype(np.int64)
    for i in range(1, diag.shape[0]):
        d = np.where(np.abs(d) < _PIVOT_FLOOR, -_PIVOT_FLOOR, d)
        d = (diag[i] - shifts) - (off[i - 1] * off[i - 1]) / d
        count += d < 0
    return count

def _inertia_counts_pentadiagonal(diag, off1, off2, shifts):
    # Column factors of row i: s1_i = L[i+1, i], s2_i = L[i+2, i].
    n = diag.shape[0]

    def _guard(d):
        return np.where(np.abs(d) < _PIVOT_FLOOR, -_PIVOT_FLOOR, d)

    d_im2 = _guard(diag[0] - shifts)
    count = (d_im2 < 0).astype(np.int64)
    s1_im2 = off1[0] / d_im2
    s2_im2 = off2[0] / d_im2
    d_im1 = _guard((diag[1] - shifts) - s1_im2 * s1_im2 * d_im2)
    count += d_im1 < 0
    s1_im1 = (off1[1] - s2_im2 * s1_im2 * d_im2) / d_im1
    s2_im1 = (off2[1] / d_im1) if n > 4 else None
    for i in range(2, n):
        d_i = _guard((diag[i] - shifts)
                     - s1_im1 * s1_im1 * d_im1
                     - s2_im2 * s2_im2 * d_im2)
        count += d_i < 0
        if i <= n - 2:
            s1_i = (off1[i] - s2_im1 * s1_im1 * d_im1) / d_i
        else:
            s1_i = None
        s2_i = (off2[i] / d_i) if i <= n - 3 else None
        d_im2, d_im1 = d_im1, d_i
        s1_im2, s1_im1 = s1_im1, s1_i
        s2_im2, s2_im1 = s2_im1, s2_i
    return count


def _bisect_eigenvalues(counts_fn, lo: float, hi: float, k: int,
                        tol: float) -> np.ndarray:
    """Find the k lowest eigenvalues inside [lo, hi] given an inertia counter."""
    targets = np.arange(1, k + 1)
    lo_b = np.full(k, lo)
    hi_b = np.full(k, hi)
    while np.max(hi_b - lo_b) > tol:
        mid = 0.5 * (lo_b + hi_b)
        c = counts_fn(mid)
        go_right = c < targets
        lo_b = np.where(go_right, mid, lo_b)
        hi_b = np.where(go_right, hi_b, mid)
    return 0.5 * (lo_b + hi_b)


def tridiagonal_eigenvalues(diag, offdiag, k: int) -> np.ndarray:
    """k lowest eigenvalues of the symmetric tridiagonal (diag, offdiag).

    Deterministic Sturm-sequence bisection; offdiag has length n-1.
    """
    diag = np.asarray(diag, dtype=np.float64)
    off = np.asarray(offdiag, dtype=np.float64)
    n = diag.shape[0]
    if off.shape[0] != n - 1:
        raise ValueError("offdiag must have length n-1")
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    # Gershgorin bounds
    pad = np.zeros(1)
    r = np.abs(np.concatenate([pad, off])) + np.abs(np.concatenate([off, pad]))
    lo = float(np.min(diag - r)) - 1.0
    hi = float(np.max(diag + r)) + 1.0
    tol = max(1e-14 * max(abs(lo), abs(hi)), 1e-14)
    return _bisect_eigenvalues(
        lambda s: _sturm_counts_tridiagonal(diag, off, s), lo, hi, k, tol)


def pentadiagonal_lowest_eigenvalues(diag, off1, off2, k: int) -> np.ndarray:
    """k lowest eigenvalues of a symmetric pentadiagonal matrix.

    Same inertia-count bisection as the tridiagonal routine, with the LDL^T
    pivot recurrence widened to bandwidth two.
    """
    diag = np.asarray(diag, dtype=np.float64)
    off1 = np.asarray(off1, dtype=np.float64)
    off2 = np.asarray(off2, dtype=np.float64)
    n = diag.shape[0]
    if off1.shape[0] != n - 1 or off2.shape[0] != n - 2:
        raise ValueError("band shapes must be (n, n-1, n-2)")
    pad = np.zeros(2)
    a1 = np.abs(np.concatenate([pad[:1], off1])) + np.abs(np.concatenate([off1, pad[:1]]))
    a2 = np.abs(np.concatenate([pad, off2])) + np.abs(np.concatenate([off2, pad]))
    lo = float(np.min(diag - a1 - a2)) - 1.0
    hi = float(np.max(diag + a1 + a2)) + 1.0
    tol = max(1e-13 * max(abs(lo), abs(hi)), 1e-13)
    return _bisect_eigenvalues(
        lambda s: _inertia_counts_pentadiagonal(diag, off1, off2, s), lo, hi, k, tol)
