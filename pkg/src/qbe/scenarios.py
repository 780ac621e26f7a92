"""The numerical experiments: accuracy, equilibrium, condensation, condensate map, bench.

Each scenario takes string overrides (``key -> value``). Keys naming a
SimulationConfig field adjust the simulation; the remaining keys are the
scenario's own parameters listed in ``SCENARIOS[name].params``.
"""
from __future__ import annotations

import logging
import math
import shutil
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import io
from .config import SimulationConfig, _FIELDS, apply_pairs
from .diagnostics import convergence_rate, l1_rel_error, phase_space_slice
from .direct import collide_direct
from .equilibrium import (Extrapolation, bounded_equilibrium, condensate_fraction, condensate_map,
                          critical_ratio, discrete_equilibrium, extrapolate_f0, solve_equilibrium)
from .errors import ConfigError
from .fast import collide_fast, collide_fast_constant_rho
from .grid import DensityOfStates, build_grid
from .integrator import RunResult, run

log = logging.getLogger(__name__)


@dataclass
class ScenarioReport:
    name: str
    values: dict = field(default_factory=dict)
    files: list[Path] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Scenario:
    base: dict
    params: dict
    func: object


def _ints(text):
    return tuple(int(x) for x in str(text).split(",") if x.strip())


def _split_overrides(name, overrides):
    scenario = SCENARIOS[name]
    cfg_pairs = dict(scenario.base)
    params = dict(scenario.params)
    for key, value in (overrides or {}).items():
        if key in _FIELDS:
            cfg_pairs[key] = str(value)
        elif key in params:
            params[key] = value
        else:
            raise ConfigError(key, f"unknown key for scenario {name!r}")
    cfg_pairs.setdefault("output_dir", f"out/{name}")
    return apply_pairs(SimulationConfig(), cfg_pairs), params


def _param(params, key, kind):
    try:
        return kind(params[key])
    except (TypeError, ValueError):
        raise ConfigError(key, f"bad value {params[key]!r}") from None


class Outputs:
    """Collects written files; removes them all if the scenario fails."""

    def __init__(self, root):
        self.root = Path(root)
        self.created_root = not self.root.exists()
        self.files = []

    def add(self, path):
        self.files.append(Path(path))
        return path

    def path(self, name):
        return self.root / name

    def discard(self):
        for p in self.files:
            p.unlink(missing_ok=True)
        if self.created_root and self.root.exists() and not any(self.root.iterdir()):
            shutil.rmtree(self.root, ignore_errors=True)


def run_scenario(name: str, overrides: dict | None = None, progress=None) -> ScenarioReport:
    if name not in SCENARIOS:
        raise ConfigError("scenario", f"unknown scenario {name!r}; choose from {sorted(SCENARIOS)}")
    config, params = _split_overrides(name, overrides)
    out = Outputs(config.output_dir)
    report = ScenarioReport(name)
    try:
        SCENARIOS[name].func(config, params, out, report, progress)
        report.metadata.setdefault("scenario", name)
        out.add(io.write_metadata(out.path("metadata.json"), {**report.metadata, "results": report.values}))
    except BaseException:
        out.discard()
        raise
    report.files = list(out.files)
    return report


def write_run(out: Outputs, stem: str, result: RunResult) -> None:
    """Time series, snapshots and metadata of one simulation."""
    out.add(io.write_timeseries(out.path(f"{stem}_timeseries.csv"), result.records))
    for t, f in result.snapshots:
        out.add(io.write_snapshot(out.path(f"{stem}_snapshot_t{t:.6g}.csv"), result.state.grid, f))


def _accuracy(config, params, out, report, progress):
    sizes = _ints(params["sizes"])
    n_ref = _param(params, "reference", int)
    samples = _param(params, "samples", int)
    times = tuple(np.linspace(0.0, config.t_final, samples))
    for scheme in str(params["schemes"]).split(","):
        states = {}
        for n in sizes + (n_ref,):
            cfg = config.with_overrides(scheme=scheme, n_points=n, snapshot_times=times,
                                        sample_every=10 ** 9)
            states[n] = run(cfg, progress)
        ref = states[n_ref]
        rows = []
        for s, t in enumerate(times):
            errs = [l1_rel_error(states[n].snapshots[s][1], states[n].state.grid,
                                 ref.snapshots[s][1], ref.state.grid) for n in sizes]
            rates = [convergence_rate(a, b) for a, b in zip(errs, errs[1:])]
            rows.append([t, *errs, *rates])
        header = ["t", *(f"err_{n}" for n in sizes),
                  *(f"rate_{a}_{b}" for a, b in zip(sizes, sizes[1:]))]
        out.add(io.write_csv(out.path(f"accuracy_{scheme}.csv"), header, rows))
        for key, value in zip(header[1:], rows[-1][1:]):
            report.values[f"{scheme}_{key}"] = value
    report.metadata.update(dt=config.dt, t_final=config.t_final, reference=n_ref,
                           restriction="block mean")


def _equilibrium(config, params, out, report, progress):
    results = {}
    for scheme in ("QBF1", "QBF2"):
        cfg = config.with_overrides(scheme=scheme, snapshot_times=(config.t_final,))
        results[scheme] = res = run(cfg, progress)
        write_run(out, scheme, res)
        s = [r.entropy for r in res.records]
        report.values[f"{scheme}_min_entropy_increment"] = float(np.min(np.diff(s))) if len(s) > 1 else 0.0
        report.metadata[scheme] = res.metadata
    q1, q2 = results["QBF1"].state, results["QBF2"].state
    mass, energy = results["QBF2"].records[0].mass, results["QBF2"].records[0].energy

    infinite = solve_equilibrium(mass, energy)
    bounded = bounded_equilibrium(mass, energy, config.cutoff)
    discrete = discrete_equilibrium(mass, energy, q2.grid, q2.model)
    rows = [("exact", "bounded", bounded.f0, True),
            ("exact", "infinite", infinite.f0, infinite.condensate_mass == 0),
            ("exact", "discrete_QBF2", discrete.f0, True),
            ("QBF1", "node", float(q1.f[0]), True)]
    for method in Extrapolation:
        value, ok = extrapolate_f0(q2.f, q2.grid, method)
        rows.append(("QBF2", method.value, value, ok))
    out.add(io.write_csv(out.path("table1.csv"), ("column", "method", "f0", "ok"), rows))
    for column, method, value, ok in rows:
        report.values[f"{column}_{method}"] = value
        report.values[f"{column}_{method}_ok"] = ok
    report.values.update(mass=mass, energy=energy, bounded_alpha=bounded.alpha, bounded_beta=bounded.beta,
                         infinite_condensate_mass=infinite.condensate_mass)
    field_ = phase_space_slice(q2.f, q2.grid, _param(params, "p_max", float),
                               _param(params, "phase_resolution", int))
    out.add(io.write_phase_space(out.path("QBF2_phase_space.csv"), field_))


def default_condensation_times(t_final, count=8):
    """0 plus log-spaced times up to ``t_final``."""
    if t_final <= 0:
        return (0.0,)
    first = min(0.1, t_final)
    return (0.0, *(float(t) for t in np.geomspace(first, t_final, count - 1)))


def _condensation(config, params, out, report, progress):
    if not config.snapshot_times:
        config = config.with_overrides(snapshot_times=default_condensation_times(config.t_final))
    res = run(config, progress)
    write_run(out, config.scheme, res)
    p_max = _param(params, "p_max", float)
    resolution = _param(params, "phase_resolution", int)
    for t, f in res.snapshots:
        field_ = phase_space_slice(f, res.state.grid, p_max, resolution)
        out.add(io.write_phase_space(out.path(f"phase_space_t{t:.6g}.csv"), field_))
    first = res.records[0]
    fraction, alpha = condensate_fraction(first.mass, first.energy)
    report.values.update(mass=first.mass, energy=first.energy, critical_time=res.critical_time,
                         condensate_fraction=fraction, alpha=alpha, final_c_f=res.records[-1].c_f)
    report.metadata.update(res.metadata, snapshot_times=config.snapshot_times)


def _condensate_map(config, params, out, report, progress):
    resolution = _param(params, "resolution", int)
    m_max = _param(params, "m_max", float)
    e_max = _param(params, "e_max", float)
    entries = condensate_map((0.0, m_max), (0.0, e_max), resolution)
    out.add(io.write_condensate_map(out.path("condensate_map.csv"), entries))
    report.values.update(critical_ratio=critical_ratio(),
                         fraction_042_050=condensate_fraction(0.42, 0.50)[0])


def time_call(func, repeats, min_time=0.0):
    """Minimum wall time over ``repeats`` calls (more if they are quicker than ``min_time``)."""
    best, total, n = math.inf, 0.0, 0
    while n < repeats or (total < min_time and n < 1000):
        t0 = time.perf_counter()
        func()
        dt = time.perf_counter() - t0
        best, total, n = min(best, dt), total + dt, n + 1
    return best


def bench_timings(sizes, repeats=3, direct_max=1024, min_time=0.2, seed=0):
    """Minimum time per (N, evaluator) over ``repeats`` interleaved rounds.

    Every round visits every case, so slow spells on a shared machine hit
    all sizes alike instead of skewing one ratio. Within a round a case is
    called until ``min_time / repeats`` has elapsed. Direct at N >= 1024 is
    timed once.
    """
    rng = np.random.default_rng(seed)
    harmonic = DensityOfStates.harmonic()
    cases = []
    for n in sizes:
        grid = build_grid(n, 10.0, "midpoint")
        f = rng.random(n)
        cases.append((n, "fast", lambda f=f, g=grid: collide_fast(f, g, harmonic), repeats))
        cases.append((n, "constant", lambda f=f, g=grid: collide_fast_constant_rho(f, g, 1.0), repeats))
        if n <= direct_max:
            cases.append((n, "direct", lambda f=f, g=grid: collide_direct(f, g, harmonic),
                          repeats if n < 1024 else 1))
    best = {}
    for r in range(repeats):
        for n, name, func, rounds in cases:
            if r < rounds:
                t = time_call(func, 1, min_time / repeats)
                best[n, name] = min(best.get((n, name), math.inf), t)
    return [(n, name, best[n, name]) for n, name, _, _ in cases]


def timing_ratios(rows):
    """{evaluator: {N: T(2N)/T(N)}} from ``(N, evaluator, seconds)`` rows."""
    table = {}
    for n, name, secs in rows:
        table.setdefault(name, {})[n] = secs
    return {name: {n: t[2 * n] / t[n] for n in sorted(t) if 2 * n in t} for name, t in table.items()}


def _bench(config, params, out, report, progress):
    rows = bench_timings(_ints(params["sizes"]), _param(params, "repeats", int),
                         _param(params, "direct_max", int), _param(params, "min_time", float))
    out.add(io.write_csv(out.path("timings.csv"), ("n", "evaluator", "seconds"), rows))
    ratios = timing_ratios(rows)
    for name, by_n in ratios.items():
        for n, r in by_n.items():
            report.values[f"{name}_ratio_{n}"] = r
    report.metadata.update(timing="min over repeats", workers=1)


SCENARIOS = {
    "accuracy": Scenario(
        {"scheme": "QBF2", "cutoff": "10", "t_final": "2.5", "dt": "0.01", "init": "gaussian"},
        {"sizes": "20,40,80", "reference": "160", "samples": "26", "schemes": "QBF1,QBF2"},
        _accuracy),
    "equilibrium": Scenario(
        {"n_points": "40", "cutoff": "10", "t_final": "10", "dt": "0.01", "init": "gaussian",
         "sample_every": "10"},
        {"p_max": "4", "phase_resolution": "81"},
        _equilibrium),
    "condensation": Scenario(
        {"scheme": "QBF2", "n_points": "320", "cutoff": "10", "t_final": "6", "dt": "0.01",
         "init": "arctan", "sample_every": "2"},
        {"p_max": "3", "phase_resolution": "81"},
        _condensation),
    "condensate_map": Scenario(
        {}, {"resolution": "51", "m_max": "1", "e_max": "1"}, _condensate_map),
    "bench": Scenario(
        {}, {"sizes": "64,128,256,512,1024", "repeats": "5", "direct_max": "1024", "min_time": "1.0"},
        _bench),
}
