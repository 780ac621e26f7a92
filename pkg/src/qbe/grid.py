"""Uniform energy grids, density of states and discrete moments."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, InvalidArgumentError


class Rule(str, enum.Enum):
    RECTANGULAR = "rectangular"
    MIDPOINT = "midpoint"


@dataclass(frozen=True)
class EnergyGrid:
    """Equally spaced nodes on [0, R].

    ``weight`` is computed once as R/N and every node is an integer or
    half-integer multiple of it, so that i + j = k + l implies
    eps_i + eps_j = eps_k + eps_l on the grid.
    """

    n_points: int
    cutoff: float
    rule: Rule
    weight: float = field(init=False)
    nodes: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        w = self.cutoff / self.n_points
        offset = 0.0 if self.rule is Rule.RECTANGULAR else 0.5
        nodes = (np.arange(self.n_points, dtype=float) + offset) * w
        nodes.setflags(write=False)
        object.__setattr__(self, "weight", w)
        object.__setattr__(self, "nodes", nodes)

    def __len__(self):
        return self.n_points


def build_grid(n_points: int, cutoff: float, rule: Rule | str = Rule.MIDPOINT) -> EnergyGrid:
    if int(n_points) != n_points or n_points < 2:
        raise InvalidArgumentError(f"n_points must be an integer >= 2, got {n_points!r}")
    if not cutoff > 0 or not np.isfinite(cutoff):
        raise InvalidArgumentError(f"cutoff must be positive, got {cutoff!r}")
    return EnergyGrid(int(n_points), float(cutoff), Rule(rule))


class DosKind(str, enum.Enum):
    HARMONIC = "harmonic"
    HOMOGENEOUS = "homogeneous"
    CONSTANT = "constant"
    TABULATED = "tabulated"


@dataclass(frozen=True)
class DensityOfStates:
    kind: DosKind
    constant: float = 1.0
    table: tuple[float, ...] | None = None

    @classmethod
    def harmonic(cls):
        return cls(DosKind.HARMONIC)

    @classmethod
    def homogeneous(cls):
        return cls(DosKind.HOMOGENEOUS)

    @classmethod
    def const(cls, c: float):
        if not c > 0:
            raise InvalidArgumentError(f"constant density of states must be positive, got {c!r}")
        return cls(DosKind.CONSTANT, constant=float(c))

    @classmethod
    def tabulated(cls, values):
        values = np.asarray(values, dtype=float)
        if values.ndim != 1 or np.any(values < 0) or not np.all(np.isfinite(values)):
            raise InvalidArgumentError("tabulated density of states must be finite and >= 0")
        return cls(DosKind.TABULATED, table=tuple(values.tolist()))

    def __call__(self, eps):
        """Evaluate rho at arbitrary energies (not available for tables)."""
        eps = np.asarray(eps, dtype=float)
        if self.kind is DosKind.HARMONIC:
            return 0.5 * eps * eps
        if self.kind is DosKind.HOMOGENEOUS:
            return 4.0 * np.pi * np.sqrt(2.0 * eps)
        if self.kind is DosKind.CONSTANT:
            return np.full_like(eps, self.constant)
        raise InvalidArgumentError("a tabulated density of states has no closed form")


def eval_density(model: DensityOfStates, grid: EnergyGrid) -> np.ndarray:
    if model.kind is DosKind.TABULATED:
        if len(model.table) != grid.n_points:
            raise InvalidArgumentError(
                f"tabulated density has {len(model.table)} values, grid has {grid.n_points}"
            )
        return np.array(model.table, dtype=float)
    return model(grid.nodes)


def check_distribution(f, grid: EnergyGrid) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    if f.shape != (grid.n_points,):
        raise InvalidArgumentError(f"distribution has shape {f.shape}, grid has {grid.n_points} nodes")
    if np.any(f < 0):
        raise DomainError("distribution has negative entries")
    return f


@dataclass(frozen=True)
class Moments:
    mass: float
    energy: float


def moments(f, grid: EnergyGrid, model: DensityOfStates) -> Moments:
    f = np.asarray(f, dtype=float)
    if f.shape != (grid.n_points,):
        raise InvalidArgumentError(f"distribution has shape {f.shape}, grid has {grid.n_points} nodes")
    rho_f = eval_density(model, grid) * f
    w = grid.weight
    return Moments(mass=w * float(np.sum(rho_f)), energy=w * float(np.sum(rho_f * grid.nodes)))
