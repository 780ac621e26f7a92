"""O(N^2 log N) collision evaluation through windowed convolutions.

Substituting h = k + l = i + j, each row of the collision sum becomes an
outer sum over j of a windowed convolution evaluated at h = i + j. The
windows come from the four-region split of the (k, l) square:

    region I    k, l in [0, i]               kernel rho_j  (outside the conv)
    region II   k in [i+1, N-1], l in [i, N-1] kernel rho_i  (row factor)
    region III  k in [i+1, N-1], l in [0, i-1] kernel rho_l  (folded into b)
    region IV   k in [0, i], l in [i+1, N-1]   kernel rho_k  (folded into a)

Every window is shifted to the origin before transforming, so the
transform length is the smallest power of two covering the windowed
convolution. For region I this is exactly 2**(beta_i + 1) with
beta_i = floor(log2(i)) + 1 in 0-based row numbering (1-based i - 1).
Rows sharing a transform length are processed as one batched FFT.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import fft as sfft

from .direct import CollisionOutput, ratio_weights
from .errors import InvalidArgumentError
from .grid import DensityOfStates, EnergyGrid, check_distribution, eval_density

_BATCH_ELEMENTS = 1 << 16

# scipy.fft worker threads; results are identical for a fixed value
workers = 1


@dataclass(frozen=True)
class Window:
    """Inclusive 0-based index window [lo, hi]; lo > hi is empty."""

    lo: int
    hi: int

    @property
    def empty(self):
        return self.lo > self.hi

    def __len__(self):
        return max(0, self.hi - self.lo + 1)


def padded(values) -> np.ndarray:
    """Copy of ``values`` extended with zeros to twice its length."""
    values = np.asarray(values, dtype=float)
    out = np.zeros(2 * values.size)
    out[: values.size] = values
    return out


def next_pow2(n: int) -> int:
    return 1 if n <= 1 else 1 << (int(n) - 1).bit_length()


def beta_index(i: int) -> int:
    """Truncation exponent for 1-based row ``i``: floor(log2(i-1)) + 1, or 0 for i = 1."""
    if i < 1:
        raise InvalidArgumentError("row index is 1-based")
    return 0 if i == 1 else (i - 1).bit_length()


def masked_convolution(a, b, wa: Window, wb: Window, length_hint: int | None = None) -> np.ndarray:
    """c[m] = sum_k a_k [k in wa] b_{m-k} [m-k in wb] for m = 0 .. len(a) - 2.

    ``a`` and ``b`` are zero-padded sequences of equal length 2N. The
    transform length is the smallest power of two covering the windowed
    product, or ``length_hint`` if that is larger.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise InvalidArgumentError("sequences must be 1-D and of equal length")
    size = a.size
    for win in (wa, wb):
        if not win.empty and (win.lo < 0 or win.hi >= size):
            raise InvalidArgumentError(f"window {win} outside [0, {size - 1}]")
    out = np.zeros(size - 1)
    if wa.empty or wb.empty:
        return out
    aw = a[wa.lo : wa.hi + 1]
    bw = b[wb.lo : wb.hi + 1]
    span = aw.size + bw.size - 1
    nfft = max(next_pow2(span), length_hint or 0)
    c = sfft.irfft(sfft.rfft(aw, nfft) * sfft.rfft(bw, nfft), nfft)[:span]
    off = wa.lo + wb.lo
    stop = min(size - 1, off + span)
    if off < stop:
        out[off:stop] = c[: stop - off]
    return out


def _shifted_rows(seq, lo, length, nfft):
    """Rows r hold seq[lo_r : lo_r + length_r], zero-padded to nfft columns."""
    padded_seq = np.concatenate([seq, np.zeros(nfft)])
    out = sliding_window_view(padded_seq, nfft)[lo]
    for r, m in enumerate(length):
        out[r, m:] = 0.0
    return out


def _windowed_row_convs(pairs, rows, lo_a, len_a, lo_b, len_b):
    """Batched windowed convolutions, one per row, grouped by transform length.

    ``pairs`` is a list of (a, b) full-length sequences sharing the row
    windows. Yields ``(sel, offsets, spans, [conv matrices])`` for each batch,
    where ``sel`` indexes into ``rows``.
    """
    span = len_a + len_b - 1
    active = (len_a > 0) & (len_b > 0)
    nfft = np.array([next_pow2(s) for s in span])
    for size in np.unique(nfft[active]):
        group = np.flatnonzero(active & (nfft == size))
        step = max(1, _BATCH_ELEMENTS // int(size))
        for start in range(0, group.size, step):
            sel = group[start : start + step]
            convs = []
            for a, b in pairs:
                A = sfft.rfft(_shifted_rows(a, lo_a[sel], len_a[sel], size), axis=1, workers=workers)
                if b is a and np.array_equal(lo_a[sel], lo_b[sel]) and np.array_equal(len_a[sel], len_b[sel]):
                    prod = A * A
                else:
                    prod = A * sfft.rfft(_shifted_rows(b, lo_b[sel], len_b[sel], size), axis=1, workers=workers)
                convs.append(sfft.irfft(prod, int(size), axis=1, workers=workers))
            yield sel, lo_a[sel] + lo_b[sel], span[sel], convs


def _region(f, rows, windows, gain_seqs, loss_seqs, outer):
    """sum_j outer_j [(1+f_i)(1+f_j) G[i+j] - f_i f_j L[i+j]] for each row i.

    G and L are the windowed convolutions of ``gain_seqs`` and ``loss_seqs``.
    """
    n = f.size
    lo_a, hi_a, lo_b, hi_b = windows
    len_a = np.maximum(hi_a - lo_a + 1, 0)
    len_b = np.maximum(hi_b - lo_b + 1, 0)
    out = np.zeros(rows.size)
    one_f = 1.0 + f
    gain_w = one_f * outer
    loss_w = f * outer
    for sel, off, span, (G, L) in _windowed_row_convs(
        [gain_seqs, loss_seqs], rows, lo_a, len_a, lo_b, len_b
    ):
        i = rows[sel]
        # row r needs conv[i - off + j] for j = 0..n-1, zero outside [0, span)
        start = i - off + n
        r = np.arange(sel.size)
        g = sliding_window_view(_pad_span(G, span, n), n, axis=1)[r, start]
        lo = sliding_window_view(_pad_span(L, span, n), n, axis=1)[r, start]
        out[sel] = one_f[i] * (g @ gain_w) - f[i] * (lo @ loss_w)
    return out


def _pad_span(conv, span, n):
    """``n`` zeros on both sides of each row, entries past the row's span zeroed."""
    out = np.zeros((conv.shape[0], conv.shape[1] + 2 * n))
    for r, m in enumerate(span):
        out[r, n : n + m] = conv[r, :m]
    return out


def _fast_regions(f, rho):
    n = f.size
    rows = np.arange(n)
    last = np.full(n, n - 1)
    zero = np.zeros(n, dtype=int)
    one_f = 1.0 + f
    rho_f = rho * f
    rho_one_f = rho * one_f
    ones = np.ones(n)
    # region I: k, l in [0, i]; kernel rho_j applied in the outer sum
    r1 = _region(f, rows, (zero, rows, zero, rows), (f, f), (one_f, one_f), rho)
    # region II: k in [i+1, N-1], l in [i, N-1]; kernel rho_i
    r2 = rho * _region(f, rows, (rows + 1, last, rows, last), (f, f), (one_f, one_f), ones)
    # region III: k in [i+1, N-1], l in [0, i-1]; kernel rho_l carried by b
    r3 = _region(f, rows, (rows + 1, last, zero, rows - 1), (f, rho_f), (one_f, rho_one_f), ones)
    # region IV: k in [0, i], l in [i+1, N-1]; kernel rho_k carried by a
    r4 = _region(f, rows, (zero, rows, rows + 1, last), (rho_f, f), (rho_one_f, one_f), ones)
    return r1, r2, r3, r4


def collide_fast(f, grid: EnergyGrid, model: DensityOfStates, regions: bool = False) -> CollisionOutput:
    f = check_distribution(f, grid)
    rho = eval_density(model, grid)
    w2 = grid.weight ** 2
    parts = tuple(w2 * r for r in _fast_regions(f, rho))
    q = parts[0] + parts[1] + parts[2] + parts[3]
    return CollisionOutput(q, parts if regions else None)


def _full_convolutions(f):
    n = f.size
    nfft = next_pow2(2 * n - 1)
    F = sfft.rfft(f, nfft)
    P = sfft.rfft(1.0 + f, nfft)
    C = sfft.irfft(F * F, nfft)[: 2 * n - 1]
    D = sfft.irfft(P * P, nfft)[: 2 * n - 1]
    return C, D


def _correlate(g, c):
    """out[i] = sum_j g_j c_{i+j}, i = 0 .. len(g) - 1."""
    n = g.size
    nfft = next_pow2(g.size + c.size - 1)
    r = sfft.irfft(sfft.rfft(g[::-1], nfft) * sfft.rfft(c, nfft), nfft)
    return r[n - 1 : 2 * n - 1]


def unweighted_sum(f):
    """sum over (j, l) of the bracket for every row, kernel 1. O(N log N)."""
    C, D = _full_convolutions(f)
    one_f = 1.0 + f
    return one_f * _correlate(one_f, C) - f * _correlate(f, D)


def collide_fast_constant_rho(f, grid: EnergyGrid, c: float) -> CollisionOutput:
    """Constant kernel: the whole operator is two full convolutions and two correlations."""
    if not c > 0:
        raise InvalidArgumentError(f"constant density must be positive, got {c!r}")
    f = check_distribution(f, grid)
    return CollisionOutput(c * grid.weight ** 2 * unweighted_sum(f))


def rhs_fast(f, grid: EnergyGrid, model: DensityOfStates) -> np.ndarray:
    f = check_distribution(f, grid)
    rho = eval_density(model, grid)
    inv = ratio_weights(rho, grid.nodes)
    w2 = grid.weight ** 2
    q = w2 * sum(_fast_regions(f, rho))
    out = q * inv
    zero_rows = np.flatnonzero(inv == 0)
    if zero_rows.size:
        out[zero_rows] = w2 * _unweighted_row(f, zero_rows)
    return out


def _unweighted_row(f, rows):
    n = f.size
    j = np.arange(n)[:, None]
    l = np.arange(n)[None, :]
    res = np.empty(rows.size)
    for r, i in enumerate(rows):
        k = i + j - l
        valid = (k >= 0) & (k < n)
        k = np.where(valid, k, 0)
        fi, fj, fk, fl = f[i], f[j], f[k], f[l]
        br = fk * fl * (1.0 + fi) * (1.0 + fj) - fi * fj * (1.0 + fk) * (1.0 + fl)
        res[r] = np.where(valid, br, 0.0).sum()
    return res
