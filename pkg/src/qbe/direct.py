"""Reference O(N^3) evaluation of the discrete collision operator.

For a node i the operator sums over every (j, l) such that k = i + j - l
is a grid index, with kernel rho(eps_min) and bracket

    f_k f_l (1 + f_i)(1 + f_j) - f_i f_j (1 + f_k)(1 + f_l).

Indices are 0-based throughout. Rows are evaluated in chunks of 3-D
arrays (rows x j x l); each row is reduced with numpy's pairwise sum.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import UnsupportedModelError
from .grid import DensityOfStates, EnergyGrid, check_distribution, eval_density

_CHUNK_ELEMENTS = 1 << 21


@dataclass
class CollisionOutput:
    q_tilde: np.ndarray
    region_parts: tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray] | None = None


def _row_chunks(n):
    rows_per_chunk = max(1, _CHUNK_ELEMENTS // (n * n))
    for start in range(0, n, rows_per_chunk):
        yield np.arange(start, min(n, start + rows_per_chunk))


def _chunk_terms(f, rows):
    """Brackets and index arrays for a chunk of rows, shaped (rows, j, l)."""
    n = f.size
    i = rows[:, None, None]
    j = np.arange(n)[None, :, None]
    l = np.arange(n)[None, None, :]
    k = i + j - l
    valid = (k >= 0) & (k < n)
    k = np.where(valid, k, 0)
    fi, fj, fk, fl = f[i], f[j], f[k], f[l]
    bracket = fk * fl * (1.0 + fi) * (1.0 + fj) - fi * fj * (1.0 + fk) * (1.0 + fl)
    bracket = np.where(valid, bracket, 0.0)
    return i, j, k, l, valid, bracket


def _argmin_index(i, j, k, l):
    # nodes are increasing, so the smallest index carries eps_min
    return np.minimum(np.minimum(i, j), np.minimum(k, l))


def ratio_weights(rho: np.ndarray, nodes: np.ndarray) -> np.ndarray:
    """1/rho_i per row, with 0 marking rows where the ratio is identically 1.

    A row with rho_i = 0 is only admissible at eps_i = 0, where every term
    has eps_min = eps_i.
    """
    bad = (rho <= 0) & (nodes > 0)
    if np.any(bad):
        raise UnsupportedModelError(
            f"density of states vanishes at eps={nodes[bad][0]:g} > 0; ratio form undefined"
        )
    inv = np.zeros_like(rho)
    pos = rho > 0
    inv[pos] = 1.0 / rho[pos]
    return inv


def _kernel(rho, inv_rho_i, i, m, normalized):
    weight = rho[m]
    if not normalized:
        return weight
    scale = inv_rho_i[i]
    # rows with rho_i == 0: eps_min == eps_i for every term, ratio is 1
    return np.where(scale > 0, weight * scale, 1.0)


def _evaluate(f, grid, model, normalized=False, regions=False):
    f = check_distribution(f, grid)
    rho = eval_density(model, grid)
    inv_rho_i = ratio_weights(rho, grid.nodes) if normalized else None
    n = grid.n_points
    w2 = grid.weight ** 2
    out = np.zeros(n)
    parts = [np.zeros(n) for _ in range(4)] if regions else None
    for rows in _row_chunks(n):
        i, j, k, l, valid, bracket = _chunk_terms(f, rows)
        m = _argmin_index(i, j, k, l)
        terms = _kernel(rho, inv_rho_i, i, m, normalized) * bracket
        out[rows] = w2 * terms.sum(axis=(1, 2))
        if regions:
            masks = _region_masks(i, k, l, valid)
            region_weights = (rho[j], rho[i], rho[l], rho[k])
            for r in range(4):
                wr = region_weights[r]
                if normalized:
                    wr = np.where(inv_rho_i[i] > 0, wr * inv_rho_i[i], 1.0)
                contrib = np.where(masks[r], wr * bracket, 0.0)
                parts[r][rows] = w2 * contrib.sum(axis=(1, 2))
    return out, parts


def _region_masks(i, k, l, valid):
    """Partition of the (k, l) summation square of row i.

    I:   k <= i, l <= i           (eps_min at j = k + l - i)
    II:  k >  i, l >= i           (eps_min at i)
    III: k >  i, l <  i           (eps_min at l)
    IV:  k <= i, l >  i           (eps_min at k)
    """
    k_lo = k <= i
    return (
        valid & k_lo & (l <= i),
        valid & ~k_lo & (l >= i),
        valid & ~k_lo & (l < i),
        valid & k_lo & (l > i),
    )


def collide_direct(f, grid: EnergyGrid, model: DensityOfStates) -> CollisionOutput:
    q, _ = _evaluate(f, grid, model)
    return CollisionOutput(q)


def collide_direct_regions(f, grid: EnergyGrid, model: DensityOfStates) -> CollisionOutput:
    """Same operator, also returning the four region sums with their own kernels."""
    q, parts = _evaluate(f, grid, model, regions=True)
    return CollisionOutput(q, tuple(parts))


def rhs_direct(f, grid: EnergyGrid, model: DensityOfStates) -> np.ndarray:
    """df_i/dt with kernel rho(eps_min)/rho(eps_i)."""
    out, _ = _evaluate(f, grid, model, normalized=True)
    return out


def term_scales(f, grid: EnergyGrid, model: DensityOfStates, normalized=False):
    """Per-row magnitude of the individual summands.

    Returns ``(abs_sum, abs_max)``: for each row, w^2 times the sum and the
    maximum over (j, l) of kernel * max(gain, loss). These set the roundoff
    scale against which cancellation-based checks are judged.
    """
    f = check_distribution(f, grid)
    rho = eval_density(model, grid)
    inv_rho_i = ratio_weights(rho, grid.nodes) if normalized else None
    n = grid.n_points
    w2 = grid.weight ** 2
    abs_sum = np.zeros(n)
    abs_max = np.zeros(n)
    for rows in _row_chunks(n):
        i, j, k, l, valid, _ = _chunk_terms(f, rows)
        fi, fj, fk, fl = f[i], f[j], f[k], f[l]
        gain = fk * fl * (1.0 + fi) * (1.0 + fj)
        loss = fi * fj * (1.0 + fk) * (1.0 + fl)
        kern = _kernel(rho, inv_rho_i, i, _argmin_index(i, j, k, l), normalized)
        mag = np.where(valid, np.abs(kern) * np.maximum(gain, loss), 0.0)
        abs_sum[rows] = w2 * mag.sum(axis=(1, 2))
        abs_max[rows] = w2 * mag.max(axis=(1, 2))
    return abs_sum, abs_max
