"""The focusing nonlinear Klein-Gordon model on the half-line.

Field equation  u_tt - u_xx + u - |u|^(2a) u = 0  for even data, its
unstable static hump S, the linearization potential, conserved energy,
the sign functional K that decides the below-separatrix dichotomy, and
the one-parameter Gaussian family used for threshold hunting.
"""

from __future__ import annotations

import numbers
from dataclasses import dataclass

import numpy as np

from . import xprec as xp
from .numerics import GridSpec, ProfileFn, first_derivative, quadrature, second_derivative


@dataclass(frozen=True)
class ModelParams:
    """Nonlinearity power a > 0 (|u|^(2a) u focusing term)."""

    alpha: float

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")


@dataclass
class FieldState:
    """The pair (u, u_t) on one grid at time t.

    Profiles are float64 arrays in the native tier or DoubleDouble arrays
    in the compensated tier; both must share the same tier.
    """

    u: object
    u_t: object
    t: float = 0.0


def static_solution(params: ModelParams, x):
    """The unstable static hump S(x) = (a+1)^(1/(2a)) / cosh(a x)^(1/a)."""
    a = params.alpha
    amp = (a + 1.0) ** (1.0 / (2.0 * a))
    return amp / np.cosh(a * np.asarray(x, dtype=np.float64)) ** (1.0 / a)


def static_profile(params: ModelParams, grid: GridSpec) -> np.ndarray:
    return static_solution(params, grid.x())


def potential(params: ModelParams, x):
    """Linearization potential: -(2a+1)(a+1) sech^2(a x); strictly negative."""
    a = params.alpha
    return -(2.0 * a + 1.0) * (a + 1.0) / np.cosh(a * np.asarray(x, dtype=np.float64)) ** 2


def nonlinear_term(u, alpha: float):
    """|u|^(2a) * u with the removable singularity at u = 0 mapped to 0.

    Integer 2a (the representative powers 1/2, 1, 3/2 all qualify) goes
    through plain products; otherwise exp(2a log|u|) with zero masked.
    """
    two_a = 2.0 * alpha
    m = xp.absolute(u)
    if float(two_a).is_integer():
        return xp.power(m, int(two_a)) * u
    zero = xp.to_float64(m) == 0.0
    if isinstance(u, xp.DoubleDouble):
        safe = xp.where(zero, 1.0, m)
        out = xp.exp(xp.log(safe) * two_a) * u
        return xp.where(zero, 0.0, out)
    with np.errstate(divide="ignore"):
        out = np.where(zero, 0.0, np.exp(two_a * np.log(np.where(zero, 1.0, m)))) * u
    return out


def nlkg_rhs(state: FieldState, params: ModelParams, grid: GridSpec):
    """Time derivative of (u, u_t) for the full nonlinear equation."""
    u = state.u
    uxx = second_derivative(u, grid)
    return state.u_t, uxx - u + nonlinear_term(u, params.alpha)


def make_linearization_potential(params: ModelParams, grid: GridSpec) -> np.ndarray:
    return potential(params, grid.x())


def linearized_rhs(state: FieldState, params: ModelParams, grid: GridSpec,
                   v_profile: np.ndarray | None = None):
    """Time derivative of (f, f_t) for perturbations about S.

    f_tt = f_xx - f - V(x) f.  Pass the sampled potential to avoid
    recomputing it every stage.
    """
    if v_profile is None:
        v_profile = make_linearization_potential(params, grid)
    f = state.u
    fxx = second_derivative(f, grid)
    return state.u_t, fxx - f - f * v_profile


def energy(state: FieldState, params: ModelParams, grid: GridSpec):
    """Conserved energy on [0, x_max].

    E = 1/2 int (u_t^2 + u_x^2 + u^2 - |u|^(2a+2)/(a+1)) dx with the
    derivative taken by the matching 4th-order stencil.
    """
    u, ut = state.u, state.u_t
    if not (xp.all_finite(u) and xp.all_finite(ut)):
        raise FloatingPointError("energy of a non-finite state (blowup already occurred)")
    ux = first_derivative(u, grid)
    dens = ut * ut + ux * ux + u * u - nonlinear_term(u, params.alpha) * u / (params.alpha + 1.0)
    return quadrature(dens, grid) * 0.5


def k_functional(u, params: ModelParams, grid: GridSpec):
    """K = int (u_x^2 + u^2 - |u|^(2a+2)) dx; K(S) = 0 and the sign of K
    decides dispersal vs blowup below the static-hump energy."""
    if not xp.all_finite(u):
        raise FloatingPointError("K of a non-finite profile")
    ux = first_derivative(u, grid)
    dens = ux * ux + u * u - nonlinear_term(u, params.alpha) * u
    return quadrature(dens, grid)


def initial_data(params: ModelParams, sigma, grid: GridSpec) -> FieldState:
    """Gaussian threshold family u(0,x) = (a+1)^(1/(2a)) exp(-x^2/sigma^2).

    The tier follows the type of sigma: a float gives a native state, a
    DoubleDouble gives a compensated state (used for deep bisection).
    """
    a = params.alpha
    x = grid.x()
    if isinstance(sigma, xp.DoubleDouble):
        if not float(sigma) > 0:
            raise ValueError("sigma must be positive")
        amp = xp.exp(xp.log(xp.DoubleDouble.from_float(a + 1.0)) * (1.0 / (2.0 * a)))
        xs = xp.DoubleDouble.from_array(x) / sigma
        u = amp * xp.exp(-(xs * xs))
        return FieldState(u, xp.DoubleDouble.from_array(np.zeros_like(x)), 0.0)
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    amp = (a + 1.0) ** (1.0 / (2.0 * a))
    u = amp * np.exp(-((x / sigma) ** 2))
    return FieldState(u, np.zeros_like(x), 0.0)


def sech_family_data(params: ModelParams, amplitude, grid: GridSpec,
                     stretch: float = 1.2) -> FieldState:
    """Second built-in family: amplitude-scaled, widened static hump.

    u(0,x) = amplitude * S(x / stretch), u_t = 0.  Used to check that the
    near-threshold dynamics does not depend on the interpolating family.
    """
    base = static_solution(params, grid.x() / stretch)
    if isinstance(amplitude, xp.DoubleDouble):
        u = amplitude * xp.DoubleDouble.from_array(base)
        return FieldState(u, xp.DoubleDouble.from_array(np.zeros_like(base)), 0.0)
    return FieldState(float(amplitude) * base, np.zeros_like(base), 0.0)


def profile_data(profile: ProfileFn, grid: GridSpec) -> FieldState:
    """Pluggable initial-data hook: arbitrary even profile at rest."""
    u = profile.sample(grid)
    return FieldState(u, np.zeros_like(u), 0.0)


def state_tier(state: FieldState) -> xp.PrecisionTier:
    return xp.tier_of(state.u)


def is_number(x) -> bool:
    return isinstance(x, numbers.Real)
