"""Time evolution with probe recording, snapshots, and outcome tagging.

The full nonlinear field and its linearization share one loop: method of
lines with the 4th-order reflection stencil in space and classical RK4 in
time, fixed step.  Runs are classified as blowup (amplitude passed a large
multiple of the static hump), dispersal (amplitude stayed below a small
multiple for a sustained hold window), or undecided at the final time.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import xprec as xp
from .model import (
    FieldState,
    ModelParams,
    energy,
    k_functional,
    linearized_rhs,
    make_linearization_potential,
    nlkg_rhs,
    static_profile,
    static_solution,
)
from .numerics import GridSpec, rk4_step, _simpson_weights


class ConfigError(ValueError):
    """A run configuration violates a constraint (maps to CLI exit code 2)."""


BLOWUP = "blowup"
DISPERSAL = "dispersal"
UNDECIDED = "undecided"


@dataclass(frozen=True)
class Outcome:
    tag: str
    t_detect: float

    @classmethod
    def blowup(cls, t):
        return cls(BLOWUP, float(t))

    @classmethod
    def dispersal(cls, t):
        return cls(DISPERSAL, float(t))

    @classmethod
    def undecided(cls, t):
        return cls(UNDECIDED, float(t))


@dataclass
class EvolveConfig:
    """Knobs for one evolution.

    Thresholds are multiples of the static-hump height S(0); dispersal
    requires the amplitude to stay below its threshold continuously for
    ``dispersal_hold`` time units.  ``probe_baseline`` (a sampled profile)
    adds a per-probe deviation column computed inside the active precision
    tier, and ``projections`` maps names to reference profiles whose
    amplitude in (u - baseline) is recorded alongside the probes.
    """

    t_end: float
    dt: float
    probe_points: tuple = (0.0,)
    snapshot_times: tuple = ()
    blowup_factor: float = 10.0
    dispersal_factor: float = 0.25
    dispersal_hold: float = 20.0
    energy_every: int = 50
    cfl: float = 0.5
    probe_baseline: np.ndarray | None = None
    projections: dict = field(default_factory=dict)
    record_energy: bool = True
    overflow_guard: float = 1e100
    # (profile, rate): continuously remove the growing component along the
    # profile from the evolving state.  Legitimate only for the linearized
    # flow, where mode evolution is independent; evolve() rejects it.
    unstable_filter: tuple | None = None

    def __post_init__(self):
        if not self.t_end > 0:
            raise ConfigError(f"t_end must be positive, got {self.t_end}")
        if not self.dt > 0:
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if not (0 < self.dispersal_factor < 1 < self.blowup_factor):
            raise ConfigError(
                "thresholds must satisfy 0 < dispersal_factor < 1 < blowup_factor")
        if not 0 < self.cfl <= 1.0:
            raise ConfigError(f"cfl must be in (0, 1], got {self.cfl}")

    def validate_against(self, grid: GridSpec):
        if self.dt > self.cfl * grid.dx + 1e-15:
            raise ConfigError(
                f"CFL violation: dt = {self.dt} exceeds cfl*dx = {self.cfl * grid.dx}")


@dataclass
class ProbeSeries:
    x: float
    index: int
    t: np.ndarray
    u: np.ndarray
    u_t: np.ndarray
    dev: np.ndarray | None = None  # u - baseline, computed in-tier


@dataclass
class Snapshot:
    t: float
    u: np.ndarray
    u_t: np.ndarray


@dataclass
class Trajectory:
    probes: list
    snapshots: list
    energy_t: np.ndarray
    energy: np.ndarray
    projections: dict
    outcome: Outcome
    truncated_at: float | None = None
    meta: dict = field(default_factory=dict)

    def probe(self, x: float = 0.0) -> ProbeSeries:
        for p in self.probes:
            if abs(p.x - x) < 1e-12:
                return p
        raise KeyError(f"no probe recorded at x = {x}")


class OutcomeTracker:
    """Incremental blowup/dispersal classifier fed with (t, sup|u|)."""

    def __init__(self, cfg: EvolveConfig, s_peak: float):
        self.blow_level = cfg.blowup_factor * s_peak
        self.disp_level = cfg.dispersal_factor * s_peak
        self.hold = cfg.dispersal_hold
        self.below_since: float | None = None
        self.last_finite_t = 0.0

    def update(self, t: float, sup_u: float, finite: bool) -> Outcome | None:
        if not finite:
            return Outcome.blowup(self.last_finite_t)
        self.last_finite_t = t
        if sup_u > self.blow_level:
            return Outcome.blowup(t)
        if sup_u < self.disp_level:
            if self.below_since is None:
                self.below_since = t
            elif t - self.below_since >= self.hold:
                return Outcome.dispersal(t)
        else:
            self.below_since = None
        return None


def classify_outcome(times, sup_values, cfg: EvolveConfig, params: ModelParams) -> Outcome:
    """Apply the outcome rules to a recorded sup-norm history."""
    tracker = OutcomeTracker(cfg, static_solution(params, 0.0))
    for t, s in zip(times, sup_values):
        out = tracker.update(float(t), float(s), bool(np.isfinite(s)))
        if out is not None:
            return out
    return Outcome.undecided(float(times[-1]) if len(times) else 0.0)


def _probe_indices(cfg: EvolveConfig, grid: GridSpec):
    idx = []
    for x in cfg.probe_points:
        i = int(round(x / grid.dx))
        if not 0 <= i < grid.n_points:
            raise ConfigError(f"probe point x = {x} outside the grid")
        idx.append(i)
    return idx


class _Recorder:
    def __init__(self, cfg: EvolveConfig, grid: GridSpec, tier_is_dd: bool):
        self.cfg = cfg
        self.grid = grid
        self.idx = _probe_indices(cfg, grid)
        self.t: list[float] = []
        self.u = [[] for _ in self.idx]
        self.ut = [[] for _ in self.idx]
        self.dev = [[] for _ in self.idx] if cfg.probe_baseline is not None else None
        self.baseline = None
        if cfg.probe_baseline is not None:
            self.baseline = (xp.DoubleDouble.from_array(cfg.probe_baseline)
                             if tier_is_dd else np.asarray(cfg.probe_baseline))
        self.snap_steps = {}
        self.snapshots: list[Snapshot] = []
        self.energy_t: list[float] = []
        self.energy: list[float] = []
        self.proj_names = list(cfg.projections.keys())
        self.proj_series = {name: [] for name in self.proj_names}
        self._proj_w = {}
        w = _simpson_weights(grid.n_points) * (grid.dx / 3.0)
        for name, ref in cfg.projections.items():
            ref64 = np.asarray(ref, dtype=np.float64)
            self._proj_w[name] = (w * ref64) / np.dot(w * ref64, ref64)

    def plan_snapshots(self, dt: float, n_steps: int):
        for ts in self.cfg.snapshot_times:
            k = int(round(ts / dt))
            if 0 <= k <= n_steps:
                self.snap_steps.setdefault(k, ts)

    def record(self, k: int, t: float, state: FieldState, u64: np.ndarray):
        self.t.append(t)
        dev_full = None
        dev64 = None
        if self.baseline is not None:
            dev_full = state.u - self.baseline
            dev64 = xp.to_float64(dev_full)
        for j, i in enumerate(self.idx):
            self.u[j].append(float(u64[i]))
            self.ut[j].append(float(xp.to_float64(state.u_t[i:i + 1])[0]))
            if self.dev is not None:
                self.dev[j].append(float(dev64[i]))
        if self.proj_names:
            base = dev64 if dev64 is not None else u64
            for name in self.proj_names:
                self.proj_series[name].append(float(np.dot(self._proj_w[name], base)))
        if k in self.snap_steps:
            self.snapshots.append(Snapshot(t, u64.copy(),
                                           xp.to_float64(state.u_t).copy()))

    def finish(self, outcome: Outcome, truncated_at, meta) -> Trajectory:
        t = np.asarray(self.t)
        probes = []
        for j, i in enumerate(self.idx):
            probes.append(ProbeSeries(
                x=i * self.grid.dx, index=i, t=t,
                u=np.asarray(self.u[j]), u_t=np.asarray(self.ut[j]),
                dev=np.asarray(self.dev[j]) if self.dev is not None else None))
        projections = {name: (t, np.asarray(vals))
                       for name, vals in self.proj_series.items()}
        return Trajectory(
            probes=probes, snapshots=self.snapshots,
            energy_t=np.asarray(self.energy_t), energy=np.asarray(self.energy),
            projections=projections, outcome=outcome,
            truncated_at=truncated_at, meta=meta)


def _run(params: ModelParams, init: FieldState, grid: GridSpec, cfg: EvolveConfig,
         rhs: Callable, classify: bool) -> Trajectory:
    cfg.validate_against(grid)
    if classify and cfg.unstable_filter is not None:
        raise ConfigError("unstable_filter would alter the nonlinear dynamics; "
                          "it applies to linearized runs only")
    tier_is_dd = isinstance(init.u, xp.DoubleDouble)
    rec = _Recorder(cfg, grid, tier_is_dd)
    n_steps = int(round(cfg.t_end / cfg.dt))
    rec.plan_snapshots(cfg.dt, n_steps)
    tracker = OutcomeTracker(cfg, static_solution(params, 0.0))
    state = FieldState(init.u, init.u_t, init.t)
    outcome = None
    truncated_at = None
    mode_filter = None
    if cfg.unstable_filter is not None:
        profile, rate = cfg.unstable_filter
        w = _simpson_weights(grid.n_points) * (grid.dx / 3.0)
        wp = (w * profile) / np.dot(w * profile, profile)
        mode_filter = (np.asarray(profile, dtype=np.float64), float(rate), wp)

    for k in range(n_steps + 1):
        t = init.t + k * cfg.dt
        if mode_filter is not None:
            profile, rate, wp = mode_filter
            # growing-branch amplitude of (f, f_t) along the mode
            a = 0.5 * (np.dot(wp, xp.to_float64(state.u))
                       + np.dot(wp, xp.to_float64(state.u_t)) / rate)
            state = FieldState(state.u - a * profile,
                               state.u_t - (a * rate) * profile, state.t)
        u64 = xp.to_float64(state.u)
        finite = bool(np.all(np.isfinite(u64)))
        sup = float(np.max(np.abs(u64))) if finite else np.inf
        state.t = t
        rec.record(k, t, state, u64)
        if cfg.record_energy and (k % cfg.energy_every == 0 or k == n_steps) and finite:
            rec.energy_t.append(t)
            rec.energy.append(float(energy(state, params, grid)))
        if classify:
            outcome = tracker.update(t, sup, finite)
        elif not finite or sup > cfg.overflow_guard:
            truncated_at = t
        if outcome is not None or truncated_at is not None or k == n_steps:
            break
        u, ut = rk4_step((state.u, state.u_t), rhs, cfg.dt)
        state = FieldState(u, ut, t + cfg.dt)

    if outcome is None:
        outcome = Outcome.undecided(state.t)
    meta = {"alpha": params.alpha, "dx": grid.dx, "n_points": grid.n_points,
            "dt": cfg.dt, "t_end": cfg.t_end,
            "tier": "dd" if tier_is_dd else "native"}
    return rec.finish(outcome, truncated_at, meta)


def evolve(params: ModelParams, init: FieldState, grid: GridSpec,
           cfg: EvolveConfig) -> Trajectory:
    """Evolve the full nonlinear field until t_end or early classification."""

    def rhs(y, t):
        return nlkg_rhs(FieldState(y[0], y[1], t), params, grid)

    return _run(params, init, grid, cfg, rhs, classify=True)


def evolve_linearized(params: ModelParams, init: FieldState, grid: GridSpec,
                      cfg: EvolveConfig) -> Trajectory:
    """Evolve the linearization about the static hump.

    Exponential growth of the unstable mode is expected, so no outcome
    classification: runs end Undecided, truncating (with a flag) if the
    field overflows.
    """
    v_profile = make_linearization_potential(params, grid)
    if isinstance(init.u, xp.DoubleDouble):
        v_profile_t = xp.DoubleDouble.from_array(v_profile)
    else:
        v_profile_t = v_profile

    def rhs(y, t):
        return linearized_rhs(FieldState(y[0], y[1], t), params, grid, v_profile_t)

    return _run(params, init, grid, cfg, rhs, classify=False)


def payne_sattinger_check(init: FieldState, params: ModelParams,
                          grid: GridSpec) -> str | None:
    """Below-separatrix dichotomy: predicted outcome tag, or None.

    Applies only when E(init) is below the static-hump energy; there the
    sign of K decides: K >= 0 means global regularity (dispersal in
    practice), K < 0 means finite-time blowup.
    """
    e0_s = energy(FieldState(static_profile(params, grid), np.zeros(grid.n_points)),
                  params, grid)
    e = float(energy(init, params, grid))
    if e >= float(e0_s):
        return None
    k = float(k_functional(init.u, params, grid))
    return DISPERSAL if k >= 0.0 else BLOWUP


def ejection_time(t: np.ndarray, y: np.ndarray, band: float) -> float:
    """Last time the deviation-from-hump probe sits inside +/- band.

    Robust against early transient excursions: ejection is the final
    departure, after which the trapped phase never resumes.
    """
    inside = np.abs(y) <= band
    if not np.any(inside):
        raise ValueError("probe never entered the trapping band")
    return float(t[np.where(inside)[0][-1]])
