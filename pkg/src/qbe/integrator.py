"""Explicit Runge-Kutta time stepping of df_i/dt = rhs_i(f)."""
from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .collision import Evaluator, rhs
from .config import SimulationConfig, density_model, grid_for, initial_distribution
from .diagnostics import DEBOUNCE_SAMPLES, DiagnosticsRecord, detect_critical_time, make_record
from .equilibrium import Extrapolation
from .errors import NumericalError
from .grid import DensityOfStates, EnergyGrid, Rule

log = logging.getLogger(__name__)

NEGATIVE_TOLERANCE = 1e-12
RK2_FLAVOR = "explicit midpoint"


@dataclass(frozen=True)
class SchemePreset:
    name: str
    order: int
    rule: Rule
    stages: int


PRESETS = {
    "QBF1": SchemePreset("QBF1", 1, Rule.RECTANGULAR, 1),
    "QBF2": SchemePreset("QBF2", 2, Rule.MIDPOINT, 2),
}


@dataclass(frozen=True)
class SimulationState:
    t: float
    f: np.ndarray
    grid: EnergyGrid
    model: DensityOfStates
    scheme: SchemePreset
    evaluator: Evaluator = Evaluator.FAST
    clamped: int = 0

    def rhs(self, f=None):
        return rhs(self.f if f is None else f, self.grid, self.model, self.evaluator)


def _nonnegative(f, state, where):
    """Clamp roundoff-level negatives to zero; abort on anything larger."""
    neg = f < 0
    if not neg.any():
        return f, 0
    worst = float(f.min())
    if worst < -NEGATIVE_TOLERANCE:
        raise NumericalError(
            f"f dropped to {worst:.3e} at t={state.t:g} ({where}); reduce dt", last_state=state
        )
    f = np.where(neg, 0.0, f)
    count = int(neg.sum())
    log.debug("clamped %d negative values at t=%g", count, state.t)
    return f, count


def _check_finite(f, state):
    if not np.all(np.isfinite(f)):
        raise NumericalError(f"non-finite values after t={state.t:g}", last_state=state)


def step_rk1(state: SimulationState, dt: float, k1=None) -> SimulationState:
    """Explicit Euler. ``k1`` may carry an already computed rhs(state.f)."""
    if dt == 0:
        return state
    k1 = state.rhs() if k1 is None else k1
    f = state.f + dt * k1
    _check_finite(f, state)
    f, n = _nonnegative(f, state, "step")
    return dataclasses.replace(state, t=state.t + dt, f=f, clamped=state.clamped + n)


def step_rk2(state: SimulationState, dt: float, k1=None) -> SimulationState:
    """Explicit midpoint: f + dt * rhs(f + dt/2 * rhs(f))."""
    if dt == 0:
        return state
    k1 = state.rhs() if k1 is None else k1
    half = state.f + 0.5 * dt * k1
    _check_finite(half, state)
    half, n1 = _nonnegative(half, state, "midpoint stage")
    f = state.f + dt * state.rhs(half)
    _check_finite(f, state)
    f, n2 = _nonnegative(f, state, "step")
    return dataclasses.replace(state, t=state.t + dt, f=f, clamped=state.clamped + n1 + n2)


def step(state: SimulationState, dt: float, k1=None) -> SimulationState:
    stepper = step_rk1 if state.scheme.stages == 1 else step_rk2
    return stepper(state, dt, k1)


@dataclass
class RunResult:
    records: list[DiagnosticsRecord]
    snapshots: list[tuple[float, np.ndarray]]
    state: SimulationState
    steps: int
    critical_time: float | None = None
    metadata: dict = field(default_factory=dict)


def initial_state(config: SimulationConfig) -> SimulationState:
    grid = grid_for(config)
    model = density_model(config)
    f0 = initial_distribution(config, grid)
    return SimulationState(0.0, f0, grid, model, PRESETS[config.scheme], Evaluator(config.evaluator))


def run(config: SimulationConfig, progress=None) -> RunResult:
    """Advance from t = 0 to ``t_final`` with fixed dt.

    A diagnostics record is taken every ``sample_every`` steps (and at the
    last step); snapshots are taken at the step nearest each requested time.
    """
    state = initial_state(config)
    method = Extrapolation(config.extrapolation)
    dt = config.dt
    n_steps = int(math.ceil(config.t_final / dt - 1e-9))
    snap_steps = {}
    for t in config.snapshot_times:
        snap_steps.setdefault(min(n_steps, int(round(t / dt))), []).append(t)

    records, snapshots = [], []
    critical = None
    n = 0
    while True:
        t = min(n * dt, config.t_final)
        state = dataclasses.replace(state, t=t)
        if n in snap_steps:
            snapshots.append((t, state.f.copy()))
        last = n >= n_steps
        sample = n % config.sample_every == 0 or last
        k1 = state.rhs() if (sample or not last) else None
        if sample:
            records.append(make_record(t, state.f, k1, state.grid, state.model, method))
            if config.stop_on_condensation and critical is None:
                critical = detect_critical_time(records)
                if critical is not None:
                    log.info("condensation detected at t=%g; stopping", critical)
                    break
            if progress is not None:
                progress(records[-1])
        if last:
            break
        h = min(dt, config.t_final - n * dt)
        state = step(state, h, k1)
        n += 1
    if critical is None:
        critical = detect_critical_time(records)
    metadata = {
        "scheme": config.scheme,
        "order": state.scheme.order,
        "rule": state.grid.rule.value,
        "rk_stages": state.scheme.stages,
        "rk_flavor": "explicit Euler" if state.scheme.stages == 1 else RK2_FLAVOR,
        "dt": dt,
        "evaluator": state.evaluator.value,
        "negative_clamps": state.clamped,
        "negative_tolerance": NEGATIVE_TOLERANCE,
        "debounce_samples": DEBOUNCE_SAMPLES,
        "steps": n,
    }
    return RunResult(records, snapshots, state, n, critical, metadata)
