"""Right-hand side of the semidiscrete system, by evaluator name."""
from __future__ import annotations

import enum

import numpy as np

from . import direct, fast
from .grid import DensityOfStates, DosKind, EnergyGrid, check_distribution


class Evaluator(str, enum.Enum):
    DIRECT = "direct"
    FAST = "fast"


def collide(f, grid: EnergyGrid, model: DensityOfStates, evaluator: Evaluator | str = Evaluator.FAST):
    if Evaluator(evaluator) is Evaluator.DIRECT:
        return direct.collide_direct(f, grid, model)
    if model.kind is DosKind.CONSTANT:
        return fast.collide_fast_constant_rho(f, grid, model.constant)
    return fast.collide_fast(f, grid, model)


def rhs(f, grid: EnergyGrid, model: DensityOfStates, evaluator: Evaluator | str = Evaluator.FAST) -> np.ndarray:
    """df_i/dt: the collision sum with kernel rho(eps_min) / rho(eps_i)."""
    if Evaluator(evaluator) is Evaluator.DIRECT:
        return direct.rhs_direct(f, grid, model)
    if model.kind is DosKind.CONSTANT:
        # kernel ratio is identically 1
        f = check_distribution(f, grid)
        return grid.weight ** 2 * fast.unweighted_sum(f)
    return fast.rhs_fast(f, grid, model)
