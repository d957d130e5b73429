"""Spectral theory of the linearized operator L = -d^2/dx^2 + V(x).

V is the exactly solvable sech-squared well produced by linearizing about
the static hump, restricted to even functions (Neumann condition at x=0).
Everything discrete about L is available in closed form: eigenvalues on an
arithmetic ladder, terminating-series eigenfunctions, the continuum-edge
mode and its resonance dichotomy, and the antibound-state ladders.  A
banded discretization of L provides an independent numerical cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gamma as _gamma

from .model import ModelParams, potential
from .numerics import (
    GridSpec,
    ode_profile_integrate,
    pentadiagonal_lowest_eigenvalues,
)

RESONANCE_TOL = 1e-12


def _mode_ratio(alpha: float) -> float:
    return (alpha + 1.0) / (2.0 * alpha)


def is_resonant(alpha: float) -> bool:
    """True iff the continuum edge carries a bounded zero-energy mode.

    Happens exactly when (a+1)/(2a) is a positive integer (a = 1, 1/3,
    1/5, ...).  The rational test uses a 1e-12 tolerance: alpha arrives as
    a machine number and near-resonant powers behave continuously in all
    downstream dynamics, so edge-of-tolerance misclassification is benign.
    """
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    r = _mode_ratio(alpha)
    return abs(r - round(r)) < RESONANCE_TOL and round(r) >= 1


def mode_count(alpha: float) -> int:
    """N + 1, the number of discrete eigenvalues (N = top mode index)."""
    r = _mode_ratio(alpha)
    if is_resonant(alpha):
        return int(round(r))  # the zero at the edge is a resonance, not an eigenvalue
    return int(math.floor(r)) + 1


def discrete_eigenvalues(alpha: float) -> np.ndarray:
    """The ladder lambda_n = a + 1 - 2 n a for n = 0..N; all entries positive.

    Exactly one entry exceeds 1 (the unstable mode); entries in (0, 1) are
    the oscillatory modes, present only for a < 1.
    """
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    n = np.arange(mode_count(alpha))
    return alpha + 1.0 - 2.0 * n * alpha


def growth_rate(alpha: float) -> float:
    """Unstable-mode growth rate sqrt(a(a+2)) (= sqrt(lambda_0^2 - 1))."""
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    return math.sqrt(alpha * (alpha + 2.0))


def oscillation_frequencies(alpha: float) -> np.ndarray:
    """omega_n = sqrt(1 - lambda_n^2) for the modes with 0 < lambda_n < 1."""
    lams = discrete_eigenvalues(alpha)[1:]
    return np.sqrt(1.0 - lams * lams)


def eigenfunction(alpha: float, n: int, grid: GridSpec) -> np.ndarray:
    """Eigenfunction v_n sampled on the grid, normalized to v_n(0) = 1.

    Built from the terminating hypergeometric series: v_n is
    cosh(a x)^(2n - 1 - 1/a) times a polynomial of order n in sech^2(a x),
    so the sum has n+1 exact terms and no special-function machinery.
    """
    lams = discrete_eigenvalues(alpha)
    if not 0 <= n < lams.shape[0]:
        raise ValueError(f"mode index {n} out of range 0..{lams.shape[0] - 1}")
    x = grid.x()
    z = 1.0 / np.cosh(alpha * x) ** 2
    a = 1.5 - n + 1.0 / alpha
    b = -float(n)
    c = 2.0 - 2.0 * n + 1.0 / alpha
    series = np.zeros_like(z)
    term = np.ones_like(z)
    series += term
    for k in range(n):
        term = term * ((a + k) * (b + k)) / ((c + k) * (k + 1.0)) * z
        series += term
    # same finite sum at z = 1 gives the normalization
    norm = 1.0
    t = 1.0
    for k in range(n):
        t = t * ((a + k) * (b + k)) / ((c + k) * (k + 1.0))
        norm += t
    envelope = np.cosh(alpha * x) ** (2.0 * n - 1.0 - 1.0 / alpha)
    return envelope * series / norm


def eigenfunction_closed_form(alpha: float, n: int, x):
    """Elementary closed forms for the first two modes (normalized at 0)."""
    x = np.asarray(x, dtype=np.float64)
    ch = np.cosh(alpha * x)
    if n == 0:
        return ch ** (-(1.0 + 1.0 / alpha))
    if n == 1:
        return ch ** (-(1.0 + 1.0 / alpha)) * (1.0 - (2.0 / alpha) * np.sinh(alpha * x) ** 2)
    raise ValueError("closed forms are kept for n = 0, 1 only")


def zero_mode(alpha: float, grid: GridSpec) -> np.ndarray:
    """Continuum-edge generalized eigenfunction, normalized to 1 at x = 0.

    Computed by outward integration of L v = 0; bounded exactly when the
    power is resonant, otherwise asymptotically linear with the slope given
    by ``zero_mode_slope``.
    """
    res = ode_profile_integrate(alpha, 0.0, grid, init_value=1.0)
    return res.values


def zero_mode_closed_form(alpha: float, x) -> np.ndarray:
    """Elementary zero-mode expressions for the quadratic and cubic cases."""
    x = np.asarray(x, dtype=np.float64)
    if abs(alpha - 1.0) < 1e-14:
        return 3.0 / np.cosh(x) ** 2 - 2.0
    if abs(alpha - 0.5) < 1e-14:
        s = 1.0 / np.cosh(0.5 * x) ** 2
        return 3.75 * s - 2.75 + x * np.tanh(0.5 * x) * (0.75 - 1.875 * s)
    raise ValueError("closed forms are kept for alpha = 1/2 and 1 only")


def zero_mode_slope(alpha: float) -> float:
    """Asymptotic slope of the zero mode: 2a sqrt(pi) / (Gamma(1 + 1/(2a)) Gamma(-1/2 - 1/(2a))).

    Vanishes exactly at the resonant powers (the gamma factor in the
    denominator hits a pole there), leaving the mode bounded.
    """
    if is_resonant(alpha):
        return 0.0
    inv = 1.0 / (2.0 * alpha)
    return 2.0 * alpha * math.sqrt(math.pi) / (_gamma(1.0 + inv) * _gamma(-0.5 - inv))


def antibound_states(alpha: float, count: int) -> np.ndarray:
    """Negative-lambda ladder (second-sheet poles), largest first.

    Two interleaved series: a + 1 - 2 n a continued past zero, and
    -(2a + 1 + 2 m a) for m >= 0.  Powers of the form 1/k have none (the
    ladders cancel against gamma-function poles), so the list is empty.
    """
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    if count < 0:
        raise ValueError("count must be non-negative")
    inv = 1.0 / alpha
    if abs(inv - round(inv)) < RESONANCE_TOL:
        return np.array([])
    r = _mode_ratio(alpha)
    n_start = math.floor(r) + 1
    n = np.arange(n_start, n_start + count)
    minus_series = alpha + 1.0 - 2.0 * n * alpha
    m = np.arange(count)
    plus_series = -(2.0 * alpha + 1.0 + 2.0 * m * alpha)
    merged = np.sort(np.concatenate([minus_series, plus_series]))[::-1]
    return merged[:count]


# ---------------------------------------------------------------------------
# Elementary closed forms of the full generalized eigenfunctions for the
# quadratic and cubic nonlinearities; kept as cross-checks of the outward
# ODE integration away from the continuum edge.
# ---------------------------------------------------------------------------

def generalized_eigenfunction_closed_form(alpha: float, lam: float, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if lam == 0.0:
        return zero_mode_closed_form(alpha, x)
    if abs(alpha - 1.0) < 1e-14:
        v = (np.cosh(lam * x) * (lam * lam + 2.0 - 3.0 / np.cosh(x) ** 2)
             - 3.0 * lam * np.tanh(x) * np.sinh(lam * x))
        return v / (lam * lam - 1.0)
    if abs(alpha - 0.5) < 1e-14:
        s2 = 1.0 / np.cosh(0.5 * x) ** 2
        v = (np.cosh(lam * x) * (lam * lam + 2.75 - 3.75 * s2)
             - np.sinh(lam * x) / lam * np.tanh(0.5 * x)
             * (3.0 * lam * lam + 0.75 - 1.875 * s2))
        return v / (lam * lam - 1.0)
    raise ValueError("closed forms are kept for alpha = 1/2 and 1 only")


# ---------------------------------------------------------------------------
# Discrete-operator cross-check
# ---------------------------------------------------------------------------

def discretized_operator_bands(alpha: float, grid: GridSpec):
    """Symmetric banded form of the discretized L.

    4th-order stencil with even reflection folded into the first two rows
    and plain truncation at the outer edge (bound states decay much too
    fast to notice).  The fold breaks symmetry at row 0; conjugating by
    diag(sqrt(1/2), 1, 1, ...) restores it without moving eigenvalues.
    """
    n = grid.n_points
    c = 1.0 / (12.0 * grid.dx ** 2)
    v = potential(ModelParams(alpha), grid.x())
    diag = np.full(n, 30.0 * c) + v
    diag[1] = 31.0 * c + v[1]
    off1 = np.full(n - 1, -16.0 * c)
    off1[0] = -32.0 * c / math.sqrt(2.0)
    off2 = np.full(n - 2, c)
    off2[0] = c * math.sqrt(2.0)
    return diag, off1, off2


@dataclass
class SpectrumCheck:
    """Report from comparing the eigenvalue ladder against the banded matrix."""

    alpha: float
    dx: float
    x_max: float
    expected: np.ndarray        # -lambda_n^2
    computed: np.ndarray        # lowest N+2 matrix eigenvalues
    rel_errors: np.ndarray
    max_rel_error: float
    n_bound_found: int


def verify_spectrum_numerically(alpha: float, grid: GridSpec) -> SpectrumCheck:
    """Compare the closed-form ladder against the discretized operator."""
    lams = discrete_eigenvalues(alpha)
    expected = -lams * lams
    k = lams.shape[0] + 2
    diag, off1, off2 = discretized_operator_bands(alpha, grid)
    computed = pentadiagonal_lowest_eigenvalues(diag, off1, off2, k)
    rel = np.abs(computed[:lams.shape[0]] - expected) / np.abs(expected)
    threshold = -0.02 * float(np.min(lams * lams))
    return SpectrumCheck(
        alpha=alpha,
        dx=grid.dx,
        x_max=grid.x_max,
        expected=expected,
        computed=computed,
        rel_errors=rel,
        max_rel_error=float(np.max(rel)),
        n_bound_found=int(np.sum(computed < threshold)),
    )


# ---------------------------------------------------------------------------
# Bundle
# ---------------------------------------------------------------------------

@dataclass
class SpectralData:
    """Everything the dynamics modules need to know about L for one power."""

    alpha: float
    lambdas: np.ndarray
    n_modes: int
    s0: float
    omegas: np.ndarray
    resonant: bool
    eigenprofiles: list = field(default_factory=list)
    zero_mode: np.ndarray | None = None


def spectral_data(alpha: float, grid: GridSpec | None = None) -> SpectralData:
    lams = discrete_eigenvalues(alpha)
    data = SpectralData(
        alpha=alpha,
        lambdas=lams,
        n_modes=lams.shape[0],
        s0=growth_rate(alpha),
        omegas=oscillation_frequencies(alpha),
        resonant=is_resonant(alpha),
    )
    if grid is not None:
        data.eigenprofiles = [eigenfunction(alpha, n, grid) for n in range(data.n_modes)]
        data.zero_mode = zero_mode(alpha, grid)
    return data
