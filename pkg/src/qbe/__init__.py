"""Conservative fast solvers for the energy-space Boltzmann equation for bosons."""
from __future__ import annotations

__version__ = "0.1.0"

from .collision import Evaluator, collide, rhs
from .direct import CollisionOutput, collide_direct, collide_direct_regions
from .errors import ConfigError, DomainError, InvalidArgumentError, NumericalError, UnsupportedModelError
from .fast import collide_fast, collide_fast_constant_rho, masked_convolution
from .grid import DensityOfStates, EnergyGrid, Rule, build_grid, eval_density, moments

__all__ = [
    "CollisionOutput", "ConfigError", "DensityOfStates", "DomainError", "EnergyGrid",
    "Evaluator", "InvalidArgumentError", "NumericalError", "Rule", "UnsupportedModelError",
    "build_grid", "collide", "collide_direct", "collide_direct_regions", "collide_fast",
    "collide_fast_constant_rho", "eval_density", "masked_convolution", "moments", "rhs",
]
