"""Bisection to the critical family parameter separating blowup from dispersal.

The Gaussian family interpolates between dispersing (small width) and
blowing-up (large width) data; a single critical width sits in between.
Bisection shrinks a validated bracket, with each iterate integrated long
enough (trapping-time estimate plus margin) that undecided outcomes are
rare.  On the native tier the bracket bottoms out near 15 decimal digits;
the compensated tier continues to about 30.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from . import xprec as xp
from .evolution import (
    BLOWUP,
    DISPERSAL,
    UNDECIDED,
    ConfigError,
    EvolveConfig,
    Outcome,
    evolve,
)
from .model import FieldState, ModelParams, initial_data, sech_family_data
from .numerics import GridSpec
from .spectral import growth_rate


class NoThresholdError(RuntimeError):
    """Bracket validation could not find differing outcomes."""


def trapping_time_estimate(delta_sigma: float, alpha: float,
                           offset: float = 0.0) -> float:
    """Expected time spent near the static hump: -ln(delta)/s0 (+ offset).

    delta_sigma is the distance from the threshold; the unstable mode grows
    out of that seed at the rate s0, so the trapped phase ends after about
    -ln(delta)/s0 time units.
    """
    if not 0 < delta_sigma < 1:
        raise ValueError(f"delta_sigma must be in (0, 1), got {delta_sigma}")
    return -math.log(delta_sigma) / growth_rate(alpha) + offset


FAMILIES: dict[str, Callable] = {
    "gaussian": initial_data,
    "sech": sech_family_data,
}


def family_state(family: str, params: ModelParams, sigma, grid: GridSpec) -> FieldState:
    try:
        maker = FAMILIES[family]
    except KeyError:
        raise ConfigError(f"unknown data family {family!r} (choose from {sorted(FAMILIES)})")
    return maker(params, sigma, grid)


@dataclass
class IterationRecord:
    sigma: str            # decimal rendering (full precision of the tier)
    outcome: str
    t_detect: float
    t_end: float
    extended: bool = False


@dataclass
class BisectionRecord:
    alpha: float
    family: str
    precision_tier: str
    iterations: list = field(default_factory=list)
    sigma_lo: object = None
    sigma_hi: object = None
    sigma_star: object = None
    half_width: float = 0.0
    digits: float = 0.0
    target_digits: int = 0
    warnings: list = field(default_factory=list)

    def as_dict(self) -> dict:
        def render(s):
            if isinstance(s, xp.DoubleDouble):
                return {"hi": float(s.hi), "lo": float(s.lo),
                        "decimal": s.to_decimal()}
            return float(s)

        return {
            "alpha": self.alpha,
            "family": self.family,
            "precision_tier": self.precision_tier,
            "target_digits": self.target_digits,
            "achieved_digits": self.digits,
            "sigma_lo": render(self.sigma_lo),
            "sigma_hi": render(self.sigma_hi),
            "sigma_star": render(self.sigma_star),
            "half_width": self.half_width,
            "warnings": list(self.warnings),
            "iterations": [
                {"sigma": it.sigma, "outcome": it.outcome,
                 "t_detect": it.t_detect, "t_end": it.t_end,
                 "extended": it.extended}
                for it in self.iterations],
        }


def _render_sigma(sigma) -> str:
    if isinstance(sigma, xp.DoubleDouble):
        return sigma.to_decimal()
    return repr(float(sigma))


def _classify_sigma(params, grid, cfg, sigma, family, record, width_now) -> str:
    """Evolve one family member with the trapping-time end-time schedule."""
    t_end = trapping_time_estimate(min(width_now, 0.5), params.alpha) + 30.0
    t_end = max(t_end, 30.0)
    run_cfg = replace(cfg, t_end=t_end, snapshot_times=(),
                      projections={}, record_energy=False)
    init = family_state(family, params, sigma, grid)
    traj = evolve(params, init, grid, run_cfg)
    out = traj.outcome
    extended = False
    if out.tag == UNDECIDED:
        run_cfg = replace(run_cfg, t_end=1.5 * t_end)
        traj = evolve(params, family_state(family, params, sigma, grid), grid, run_cfg)
        out = traj.outcome
        extended = True
        if out.tag == UNDECIDED:
            record.warnings.append(
                f"sigma={_render_sigma(sigma)} undecided after extension to "
                f"t={run_cfg.t_end:.1f}; treated as dispersal")
            record.iterations.append(IterationRecord(
                _render_sigma(sigma), UNDECIDED, out.t_detect, run_cfg.t_end, extended))
            return DISPERSAL
    record.iterations.append(IterationRecord(
        _render_sigma(sigma), out.tag, out.t_detect, run_cfg.t_end, extended))
    return out.tag


def bracket_initial(params: ModelParams, grid: GridSpec, cfg: EvolveConfig,
                    sigma_lo, sigma_hi, family: str = "gaussian",
                    record: BisectionRecord | None = None):
    """Validate (and if needed geometrically widen) the starting bracket.

    Returns (sigma_lo, sigma_hi) with dispersal at the bottom and blowup at
    the top; raises NoThresholdError if ten doublings fail to split them.
    """
    if not float(sigma_lo) < float(sigma_hi):
        raise ConfigError(
            f"need sigma_lo < sigma_hi, got {float(sigma_lo)} >= {float(sigma_hi)}")
    if record is None:
        record = BisectionRecord(alpha=params.alpha, family=family,
                                 precision_tier=xp.tier_of(sigma_lo).name)
    width = float(sigma_hi) - float(sigma_lo)
    out_lo = _classify_sigma(params, grid, cfg, sigma_lo, family, record, width)
    out_hi = _classify_sigma(params, grid, cfg, sigma_hi, family, record, width)
    for _ in range(10):
        if out_lo == DISPERSAL and out_hi == BLOWUP:
            return sigma_lo, sigma_hi
        if out_lo == BLOWUP:
            sigma_hi, out_hi = sigma_lo, out_lo
            sigma_lo = sigma_lo * 0.5
            out_lo = _classify_sigma(params, grid, cfg, sigma_lo, family, record,
                                     float(sigma_hi) - float(sigma_lo))
        elif out_hi == DISPERSAL:
            sigma_lo, out_lo = sigma_hi, out_hi
            sigma_hi = sigma_hi * 2.0
            out_hi = _classify_sigma(params, grid, cfg, sigma_hi, family, record,
                                     float(sigma_hi) - float(sigma_lo))
        else:
            break
    if out_lo == DISPERSAL and out_hi == BLOWUP:
        return sigma_lo, sigma_hi
    raise NoThresholdError(
        f"could not bracket a threshold: outcomes ({out_lo}, {out_hi}) "
        f"at sigma = ({_render_sigma(sigma_lo)}, {_render_sigma(sigma_hi)})")


def bisect(params: ModelParams, grid: GridSpec, cfg: EvolveConfig,
           sigma_lo, sigma_hi, target_digits: int,
           family: str = "gaussian",
           validate_bracket: bool = True) -> BisectionRecord:
    """Shrink a (dispersal, blowup) bracket to the requested decimal depth.

    The achieved depth is capped by the tier: about 15 digits on native
    floats, about 30 on the compensated tier.  The returned record carries
    every iterate, the final bracket, and the midpoint estimate with its
    half-width.
    """
    tier = xp.tier_of(sigma_lo)
    max_digits = 14 if tier.name == "native" else 30
    if target_digits > max_digits:
        raise ConfigError(
            f"target_digits={target_digits} exceeds the {tier.name} tier cap {max_digits}")
    record = BisectionRecord(alpha=params.alpha, family=family,
                             precision_tier=tier.name, target_digits=target_digits)
    if validate_bracket:
        sigma_lo, sigma_hi = bracket_initial(params, grid, cfg, sigma_lo, sigma_hi,
                                             family, record)
    goal = 10.0 ** (-target_digits)
    while True:
        width = float(sigma_hi - sigma_lo)
        if width <= goal:
            break
        mid = (sigma_lo + sigma_hi) * 0.5
        exhausted = (float(mid) == float(sigma_lo) or float(mid) == float(sigma_hi)
                     if tier.name == "native"
                     else bool(np.all(mid == sigma_lo)) or bool(np.all(mid == sigma_hi)))
        if exhausted:
            record.warnings.append(
                f"precision exhausted at width {width:.3e}; stopping early")
            break
        out = _classify_sigma(params, grid, cfg, mid, family, record, width)
        if out == DISPERSAL:
            sigma_lo = mid
        else:
            sigma_hi = mid
    record.sigma_lo = sigma_lo
    record.sigma_hi = sigma_hi
    record.sigma_star = (sigma_lo + sigma_hi) * 0.5
    record.half_width = 0.5 * float(sigma_hi - sigma_lo)
    record.digits = -math.log10(max(2.0 * record.half_width, 1e-300))
    return record
