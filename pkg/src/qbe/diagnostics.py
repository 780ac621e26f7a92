"""Scalar functionals, error metrics and condensation indicators."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .equilibrium import Extrapolation, extrapolate_f0
from .errors import DomainError, InvalidArgumentError
from .grid import DensityOfStates, EnergyGrid, eval_density, moments

DEBOUNCE_SAMPLES = 3


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    mass: float
    energy: float
    entropy: float
    entropy_production: float
    c_f: float
    f0_extrapolated: float
    extrapolation_ok: bool


def _h(f):
    """(1+f) ln(1+f) - f ln f with 0 ln 0 = 0."""
    f = np.asarray(f, dtype=float)
    f_log_f = np.zeros_like(f)
    pos = f > 0
    f_log_f[pos] = f[pos] * np.log(f[pos])
    return (1.0 + f) * np.log1p(f) - f_log_f


def entropy(f, grid: EnergyGrid, model: DensityOfStates) -> float:
    rho = eval_density(model, grid)
    return grid.weight * float(np.sum(rho * _h(f)))


def entropy_production(f, q_tilde, grid: EnergyGrid) -> tuple[float, bool]:
    """w sum_i [ln(1+f_i) - ln f_i] Q_i.

    Nodes with f_i = 0 are left out; the flag is True when that happened.
    """
    f = np.asarray(f, dtype=float)
    q_tilde = np.asarray(q_tilde, dtype=float)
    pos = f > 0
    phi = np.log1p(f[pos]) - np.log(f[pos])
    return grid.weight * float(np.sum(phi * q_tilde[pos])), bool(not pos.all())


def restrict(f_ref, n_coarse: int) -> np.ndarray:
    """Block mean of consecutive groups of fine values onto ``n_coarse`` cells."""
    f_ref = np.asarray(f_ref, dtype=float)
    if n_coarse <= 0 or f_ref.size % n_coarse:
        raise InvalidArgumentError(f"fine grid of {f_ref.size} nodes is not a multiple of {n_coarse}")
    return f_ref.reshape(n_coarse, -1).mean(axis=1)


def l1_rel_error(f, grid: EnergyGrid, f_ref, grid_ref: EnergyGrid) -> float:
    """Relative discrete L1 distance between ``f`` and the restricted reference."""
    if grid_ref.rule is not grid.rule or not math.isclose(grid.cutoff, grid_ref.cutoff):
        raise InvalidArgumentError("reference grid must share rule and cutoff")
    coarse = restrict(f_ref, grid.n_points)
    return float(np.sum(np.abs(np.asarray(f) - coarse)) / np.sum(np.abs(coarse)))


def convergence_rate(err_n: float, err_2n: float) -> float:
    if not (err_n > 0 and err_2n > 0):
        raise DomainError(f"errors must be positive, got {err_n!r}, {err_2n!r}")
    return math.log2(err_n / err_2n)


def condensate_indicator(f) -> float:
    """Share of the total occupation sitting at the lowest node."""
    f = np.asarray(f, dtype=float)
    total = float(np.sum(f))
    if not total > 0:
        raise DomainError("condensate indicator undefined for an all-zero distribution")
    return float(f[0]) / total


def make_record(t, f, rhs_values, grid, model, method=Extrapolation.STEADY) -> DiagnosticsRecord:
    """Snapshot of all scalar diagnostics; ``rhs_values`` is df/dt at ``f``."""
    mom = moments(f, grid, model)
    q_tilde = eval_density(model, grid) * rhs_values
    production, _ = entropy_production(f, q_tilde, grid)
    try:
        f0, ok = extrapolate_f0(f, grid, method)
    except DomainError:
        f0, ok = math.nan, False
    return DiagnosticsRecord(
        t=float(t),
        mass=mom.mass,
        energy=mom.energy,
        entropy=entropy(f, grid, model),
        entropy_production=production,
        c_f=condensate_indicator(f),
        f0_extrapolated=float(f0),
        extrapolation_ok=bool(ok),
    )


def detect_critical_time(records, debounce: int = DEBOUNCE_SAMPLES) -> float | None:
    """Time of the first true -> false switch of the extrapolation flag that
    is followed by at least ``debounce`` consecutive failing samples."""
    flags = [r.extrapolation_ok for r in records]
    for n in range(1, len(flags)):
        if flags[n - 1] and not flags[n]:
            window = flags[n : n + debounce]
            if len(window) == debounce and not any(window):
                return records[n].t
    return None


@dataclass(frozen=True)
class PhaseSpaceField:
    p1: np.ndarray
    p2: np.ndarray
    values: np.ndarray  # values[a, b] = F(p1[a], p2[b])


def phase_space_slice(f, grid: EnergyGrid, p_max: float, resolution: int) -> PhaseSpaceField:
    """F(x=0, p=(p1, p2, 0)) = f((p1^2 + p2^2) / 2) for the trap with V(0) = 0.

    f is interpolated linearly in energy, held at f_1 below the first node
    and set to zero beyond the last.
    """
    if not p_max > 0:
        raise InvalidArgumentError("p_max must be positive")
    half = np.linspace(-p_max, p_max, resolution)
    p = 0.5 * (half - half[::-1])  # exactly antisymmetric
    eps = 0.5 * (p[:, None] ** 2 + p[None, :] ** 2)
    f = np.asarray(f, dtype=float)
    values = np.interp(eps, grid.nodes, f, left=f[0], right=0.0)
    return PhaseSpaceField(p, p.copy(), values)
