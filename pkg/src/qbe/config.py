"""Flat ``key = value`` simulation configuration.

One pair per line, ``#`` starts a comment. Unknown keys, bad types and
invariant violations raise ConfigError naming the key.
"""
from __future__ import annotations

import csv
import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .collision import Evaluator
from .equilibrium import Extrapolation, be_sample
from .errors import ConfigError, DomainError, InvalidArgumentError
from .grid import DensityOfStates, EnergyGrid, build_grid

SCHEMES = ("QBF1", "QBF2")
REQUIRED = ("scheme", "n_points", "cutoff", "t_final")


@dataclass
class SimulationConfig:
    scheme: str = "QBF2"
    n_points: int = 40
    cutoff: float = 10.0
    t_final: float = 2.5
    dt: float = 0.01
    evaluator: str = "fast"
    rho: str = "harmonic"
    init: str = "gaussian"
    # exp(-((eps - center) / width)^2); defaults give exp(-4 (eps - R/2)^2)
    gaussian_center: float | None = None
    gaussian_width: float = 0.5
    # (2 fbar / pi) arctan(exp(gamma (1 - eps / eps0)))
    arctan_gamma: float = 5.0
    arctan_eps0: float | None = None
    arctan_fbar: float = 1.0
    sample_every: int = 10
    snapshot_times: tuple[float, ...] = field(default_factory=tuple)
    extrapolation: str = "steady"
    output_dir: str = "out"
    stop_on_condensation: bool = False

    def __post_init__(self):
        if self.gaussian_center is None:
            self.gaussian_center = self.cutoff / 2.0
        if self.arctan_eps0 is None:
            self.arctan_eps0 = self.cutoff / 8.0

    def with_overrides(self, **changes) -> "SimulationConfig":
        out = dataclasses.replace(self, **changes)
        validate(out)
        return out


_FIELDS = {f.name: f for f in dataclasses.fields(SimulationConfig)}


def _parse_bool(text):
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _coerce(key, text):
    text = text.strip()
    try:
        if key in ("n_points", "sample_every"):
            return int(text)
        if key in ("cutoff", "t_final", "dt", "gaussian_center", "gaussian_width",
                   "arctan_gamma", "arctan_eps0", "arctan_fbar"):
            return float(text)
        if key == "snapshot_times":
            return tuple(float(x) for x in text.split(",") if x.strip())
        if key == "stop_on_condensation":
            return _parse_bool(text)
    except ValueError as exc:
        raise ConfigError(key, f"bad value {text!r} ({exc})") from None
    return text


def parse_pairs(text: str) -> dict:
    pairs = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", f"expected key = value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        pairs[key] = value
    return pairs


def apply_pairs(base: SimulationConfig | None, pairs: dict) -> SimulationConfig:
    values = dataclasses.asdict(base) if base is not None else {}
    if base is not None:
        # derived defaults follow the cutoff unless set explicitly
        if base.gaussian_center == base.cutoff / 2.0:
            values["gaussian_center"] = None
        if base.arctan_eps0 == base.cutoff / 8.0:
            values["arctan_eps0"] = None
    for key, text in pairs.items():
        if key not in _FIELDS:
            raise ConfigError(key, "unknown key")
        values[key] = _coerce(key, text)
    config = SimulationConfig(**values)
    validate(config)
    return config


def parse_config(text: str, overrides: dict | None = None) -> SimulationConfig:
    pairs = parse_pairs(text)
    pairs.update(overrides or {})
    for key in REQUIRED:
        if key not in pairs:
            raise ConfigError(key, "required key missing")
    return apply_pairs(None, pairs)


def validate(c: SimulationConfig) -> None:
    if c.scheme not in SCHEMES:
        raise ConfigError("scheme", f"must be one of {SCHEMES}, got {c.scheme!r}")
    if c.n_points < 2:
        raise ConfigError("n_points", f"must be >= 2, got {c.n_points}")
    if not (c.cutoff > 0 and math.isfinite(c.cutoff)):
        raise ConfigError("cutoff", f"must be positive, got {c.cutoff}")
    if not c.dt > 0:
        raise ConfigError("dt", f"must be positive, got {c.dt}")
    if not c.t_final >= 0:
        raise ConfigError("t_final", f"must be >= 0, got {c.t_final}")
    if c.sample_every < 1:
        raise ConfigError("sample_every", f"must be >= 1, got {c.sample_every}")
    if any(not 0 <= t <= c.t_final for t in c.snapshot_times):
        raise ConfigError("snapshot_times", f"must lie in [0, {c.t_final}]")
    for key, enum_type in (("evaluator", Evaluator), ("extrapolation", Extrapolation)):
        try:
            enum_type(getattr(c, key))
        except ValueError:
            allowed = [e.value for e in enum_type]
            raise ConfigError(key, f"must be one of {allowed}, got {getattr(c, key)!r}") from None
    try:
        density_model(c)
    except (InvalidArgumentError, ValueError, OSError) as exc:
        raise ConfigError("rho", str(exc)) from None
    kind = c.init.split(":", 1)[0]
    if kind not in ("gaussian", "arctan", "be", "table"):
        raise ConfigError("init", f"unknown initial datum {c.init!r}")


def read_table(path) -> np.ndarray:
    """Values from a one-column file or from the ``f`` column of a snapshot CSV."""
    text = Path(path).read_text()
    first = text.lstrip().splitlines()[0] if text.strip() else ""
    if "," in first and not first[0].isdigit():
        rows = list(csv.DictReader(text.splitlines()))
        return np.array([float(r["f"]) for r in rows])
    return np.array([float(x) for x in text.split()])


def density_model(c: SimulationConfig) -> DensityOfStates:
    kind, _, arg = c.rho.partition(":")
    if kind == "harmonic":
        return DensityOfStates.harmonic()
    if kind == "homogeneous":
        return DensityOfStates.homogeneous()
    if kind == "constant":
        return DensityOfStates.const(float(arg))
    if kind == "table":
        return DensityOfStates.tabulated(read_table(arg))
    raise InvalidArgumentError(f"unknown density of states {c.rho!r}")


def grid_for(c: SimulationConfig) -> EnergyGrid:
    rule = "rectangular" if c.scheme == "QBF1" else "midpoint"
    return build_grid(c.n_points, c.cutoff, rule)


def initial_distribution(c: SimulationConfig, grid: EnergyGrid) -> np.ndarray:
    kind, _, arg = c.init.partition(":")
    eps = grid.nodes
    if kind == "gaussian":
        return np.exp(-(((eps - c.gaussian_center) / c.gaussian_width) ** 2))
    if kind == "arctan":
        return 2.0 * c.arctan_fbar / np.pi * np.arctan(np.exp(c.arctan_gamma * (1.0 - eps / c.arctan_eps0)))
    if kind == "be":
        try:
            alpha, beta = (float(x) for x in arg.split(","))
        except ValueError:
            raise ConfigError("init", f"expected be:<alpha>,<beta>, got {c.init!r}") from None
        try:
            return be_sample(alpha, beta, grid)
        except DomainError as exc:
            raise ConfigError("init", str(exc)) from None
    values = read_table(arg)
    if values.size != grid.n_points or np.any(values < 0):
        raise ConfigError("init", f"table must hold {grid.n_points} nonnegative values")
    return values
