"""Bose-Einstein equilibria for the harmonic trap (rho = eps^2 / 2).

The regular equilibrium with parameters (alpha, beta) has

    M = Li_3(x) / alpha^3,    E = 3 Li_4(x) / alpha^4,    x = exp(-beta),

so E^3 / M^4 = 27 Li_4(x)^3 / Li_3(x)^4 depends on x alone. Its infimum,
attained at x = 1, is 27 zeta(4)^3 / zeta(3)^4; pairs below it cannot be
reached by a regular distribution and the surplus mass sits in a Dirac
mass at zero energy.
"""
from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize, special

from .errors import DomainError, InvalidArgumentError, NumericalError
from .grid import DensityOfStates, EnergyGrid, eval_density

SERIES_RTOL = 1e-15
MAX_BISECTIONS = 200


def polylog(order: int, x: float) -> float:
    """Li_order(x) for integer order >= 2 and 0 <= x <= 1.

    Sums x^n / n^order until a term drops below 1e-15 of the partial sum,
    then adds the remainder estimated by the midpoint integral
    int_{N+1/2}^inf x^t t^-order dt = T^(1-order) E_order(-T ln x).
    """
    if order < 2 or int(order) != order:
        raise InvalidArgumentError(f"polylog order must be an integer >= 2, got {order!r}")
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"polylog argument must lie in [0, 1], got {x!r}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return zeta(order)
    return _polylog_series(order, x)


@functools.lru_cache(maxsize=None)
def zeta(order: int) -> float:
    if order < 2 or int(order) != order:
        raise InvalidArgumentError(f"zeta order must be an integer >= 2, got {order!r}")
    return _polylog_series(int(order), 1.0)


def _polylog_series(order, x):
    log_x = math.log(x)
    partial = 0.0
    n0, chunk = 1, 256
    chunk_sums = []
    while True:
        n = np.arange(n0, n0 + chunk, dtype=float)
        terms = np.exp(n * log_x - order * np.log(n))
        running = partial + np.cumsum(terms)
        stop = terms <= SERIES_RTOL * running
        if stop.any():
            last = int(np.argmax(stop))
            chunk_sums.append(math.fsum(terms[last::-1]))
            n_last = n0 + last
            break
        chunk_sums.append(math.fsum(terms[::-1]))
        partial = running[-1]
        n0 += chunk
        chunk = min(chunk * 2, 1 << 20)
    # later chunks hold the smaller terms
    total = math.fsum(chunk_sums[::-1])
    t = n_last + 0.5
    tail = t ** (1 - order) * special.expn(order, -log_x * t)
    return total + tail


def critical_ratio() -> float:
    """Smallest E^3/M^4 attainable by a regular equilibrium, 27 zeta(4)^3 / zeta(3)^4."""
    return 27.0 * zeta(4) ** 3 / zeta(3) ** 4


def be_sample(alpha: float, beta: float, grid: EnergyGrid) -> np.ndarray:
    g = alpha * grid.nodes + beta
    if np.any(g <= 0):
        raise DomainError(f"alpha*eps + beta <= 0 on the grid (alpha={alpha}, beta={beta})")
    return 1.0 / np.expm1(g)


def bose_integral(s: int, alpha: float, beta: float) -> float:
    """int_0^inf eps^s / (exp(alpha eps + beta) - 1) d eps = s! Li_{s+1}(e^-beta) / alpha^(s+1)."""
    if int(s) != s or s < 2:
        raise InvalidArgumentError(f"s must be an integer >= 2, got {s!r}")
    if not alpha > 0:
        raise DomainError(f"alpha must be positive, got {alpha!r}")
    if beta < 0:
        raise DomainError(f"beta must be >= 0 for a regular equilibrium, got {beta!r}")
    return math.factorial(s) * polylog(s + 1, math.exp(-beta)) / alpha ** (s + 1)


def harmonic_moments(alpha: float, beta: float) -> tuple[float, float]:
    """(M, E) of the regular equilibrium for rho = eps^2/2 on [0, inf)."""
    return 0.5 * bose_integral(2, alpha, beta), 0.5 * bose_integral(3, alpha, beta)


@dataclass(frozen=True)
class EquilibriumParams:
    alpha: float
    beta: float
    beta_plus: float
    beta_minus: float
    condensate_mass: float

    @classmethod
    def from_beta(cls, alpha, beta):
        beta_plus = max(beta, 0.0)
        beta_minus = -max(-beta, 0.0)
        return cls(alpha, beta, beta_plus, beta_minus, abs(beta_minus))

    @property
    def f0(self) -> float:
        """Zero-energy value of the regular part (inf when beta_plus = 0)."""
        return math.inf if self.beta_plus == 0 else 1.0 / math.expm1(self.beta_plus)


def _check_pair(M, E):
    if not (M > 0 and E > 0):
        raise DomainError(f"mass and energy must be positive, got M={M!r}, E={E!r}")


def _alpha_from_energy(E):
    """Solve E = (1/2) bose_integral(3, alpha, 0) by Newton from the closed form."""
    alpha = (math.pi ** 4 / (30.0 * E)) ** 0.25
    c = 0.5 * bose_integral(3, 1.0, 0.0)  # E(alpha) = c / alpha^4
    for _ in range(50):
        step = (c / alpha ** 4 - E) / (-4.0 * c / alpha ** 5)
        alpha -= step
        if abs(step) <= 1e-15 * alpha:
            break
    return alpha


def condensate_fraction(M: float, E: float) -> tuple[float, float]:
    """Equilibrium condensate mass fraction and the alpha solving the energy equation."""
    _check_pair(M, E)
    alpha = _alpha_from_energy(E)
    i_alpha = 0.5 * bose_integral(2, alpha, 0.0)
    return float(max(0.0, 1.0 - i_alpha / M)), float(alpha)


def solve_equilibrium(M: float, E: float) -> EquilibriumParams:
    _check_pair(M, E)
    ratio = E ** 3 / M ** 4
    if ratio <= critical_ratio():
        fraction, alpha = condensate_fraction(M, E)
        return EquilibriumParams.from_beta(float(alpha), float(-fraction * M))

    def excess(beta):
        x = math.exp(-beta)
        return 27.0 * polylog(4, x) ** 3 / polylog(3, x) ** 4 - ratio

    lo, hi = 0.0, max(1.0, math.log(ratio / 27.0) + 5.0)
    while excess(hi) < 0:
        hi *= 2.0
    for _ in range(MAX_BISECTIONS):
        mid = 0.5 * (lo + hi)
        if excess(mid) > 0:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-14 * max(1.0, hi):
            break
    else:
        raise NumericalError("equilibrium bisection did not converge")
    beta = 0.5 * (lo + hi)
    alpha = (polylog(3, math.exp(-beta)) / M) ** (1.0 / 3.0)
    return EquilibriumParams.from_beta(alpha, beta)


def _solve_log_params(residual, guess, what):
    """Root of ``residual(alpha, beta)`` searched over (ln alpha, ln beta)."""
    sol = optimize.root(lambda p: residual(*np.exp(p)), np.log(guess), method="hybr",
                        options={"xtol": 1e-14})
    # hybr reports failure when it cannot improve on an already exact guess
    if not sol.success and max(abs(r) for r in residual(*np.exp(sol.x))) > 1e-12:
        raise NumericalError(f"{what} solve failed: {sol.message}")
    alpha, beta = np.exp(sol.x)
    return EquilibriumParams.from_beta(float(alpha), float(beta))


def _default_guess(M, E):
    p = solve_equilibrium(M, E)
    return p.alpha, max(p.beta_plus, 0.05)


def bounded_equilibrium(M: float, E: float, cutoff: float, guess=None) -> EquilibriumParams:
    """Regular equilibrium matching (M, E) with the moments truncated to [0, cutoff]."""
    _check_pair(M, E)

    def residual(alpha, beta):
        m = integrate.quad(lambda e: 0.5 * e * e / math.expm1(alpha * e + beta), 0, cutoff, limit=200)[0]
        en = integrate.quad(lambda e: 0.5 * e ** 3 / math.expm1(alpha * e + beta), 0, cutoff, limit=200)[0]
        return [m / M - 1.0, en / E - 1.0]

    return _solve_log_params(residual, guess or _default_guess(M, E), "bounded equilibrium")


def discrete_equilibrium(M: float, E: float, grid: EnergyGrid, model: DensityOfStates,
                         guess=None) -> EquilibriumParams:
    """Grid Bose-Einstein state whose discrete moments equal (M, E).

    This is the stationary point a conservative scheme relaxes to on ``grid``.
    """
    _check_pair(M, E)
    rho = eval_density(model, grid)
    eps = grid.nodes
    w = grid.weight

    def residual(alpha, beta):
        f = 1.0 / np.expm1(alpha * eps + beta)
        return [w * np.sum(rho * f) / M - 1.0, w * np.sum(rho * eps * f) / E - 1.0]

    return _solve_log_params(residual, guess or _default_guess(M, E), "discrete equilibrium")


@dataclass(frozen=True)
class CondensateMapEntry:
    mass: float
    energy: float
    fraction: float


def condensate_map(m_range=(0.0, 1.0), e_range=(0.0, 1.0), resolution=21) -> list[CondensateMapEntry]:
    """Condensate fraction on a uniform (M, E) lattice, M-major.

    Lattice points with M = 0 or E = 0 carry fraction NaN.
    """
    if isinstance(resolution, int):
        resolution = (resolution, resolution)
    entries = []
    for M in np.linspace(*m_range, resolution[0]):
        for E in np.linspace(*e_range, resolution[1]):
            if M <= 0 or E <= 0:
                entries.append(CondensateMapEntry(float(M), float(E), math.nan))
            else:
                entries.append(CondensateMapEntry(float(M), float(E), condensate_fraction(M, E)[0]))
    return entries


class Extrapolation(str, enum.Enum):
    STEADY = "steady"
    PAPER_STEADY = "paper_steady"
    EXPONENTIAL = "exponential"
    CUBIC = "cubic"
    LINEAR = "linear"


def steady_fit(f, grid: EnergyGrid) -> tuple[float, float]:
    """(alpha, beta) of the line through ln(1 + 1/f) at the first two nodes."""
    f1, f2 = float(f[0]), float(f[1])
    e1, e2 = grid.nodes[0], grid.nodes[1]
    g1, g2 = math.log1p(1.0 / f1), math.log1p(1.0 / f2)
    alpha = (g2 - g1) / (e2 - e1)
    return alpha, g1 - alpha * e1


def extrapolate_f0(f, grid: EnergyGrid, method: Extrapolation | str = Extrapolation.STEADY) -> tuple[float, bool]:
    """Estimate f at zero energy from the lowest nodes.

    Returns ``(value, ok)``; the steady-state methods report ``ok = False``
    (and value NaN) when the fitted beta is not positive.
    """
    method = Extrapolation(method)
    f = np.asarray(f, dtype=float)
    need = 4 if method is Extrapolation.CUBIC else 2
    if f.size < need or np.any(f[:need] <= 0):
        raise DomainError(f"{method.value} extrapolation needs the first {need} values positive")
    e = grid.nodes
    f1, f2 = float(f[0]), float(f[1])
    if method is Extrapolation.STEADY:
        _, beta = steady_fit(f, grid)
    elif method is Extrapolation.PAPER_STEADY:
        beta = math.log((f2 + 1.0) / f2) + math.log(f2 * (f2 + 1.0) / (f1 * (f1 + 1.0))) / grid.weight
    elif method is Extrapolation.EXPONENTIAL:
        b = math.log(f2 / f1) / (e[1] - e[0])
        return f1 * math.exp(-b * e[0]), True
    elif method is Extrapolation.LINEAR:
        return float(f1 - e[0] * (f2 - f1) / (e[1] - e[0])), True
    else:
        x, y = e[:4], f[:4]
        value = 0.0
        for a in range(4):
            basis = 1.0
            for b in range(4):
                if b != a:
                    basis *= (0.0 - x[b]) / (x[a] - x[b])
            value += y[a] * basis
        return float(value), True
    if beta > 0:
        return 1.0 / math.expm1(beta), True
    return math.nan, False
