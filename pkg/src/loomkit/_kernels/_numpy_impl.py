"""Pure-numpy implementations of the hot kernels.

Semantics here are the reference; the compiled extension must match these
results bit for bit. All functions take C-contiguous numpy arrays.
"""

from __future__ import annotations

import numpy as np

BACKEND_NAME = "numpy"


def mask_overlap(a: np.ndarray, b: np.ndarray):
    """Return (intersection, union) pixel counts of two uint8 bit grids."""
    a = a.astype(bool, copy=False)
    b = b.astype(bool, copy=False)
    inter = int(np.count_nonzero(a & b))
    union = int(np.count_nonzero(a | b))
    return inter, union


def boundary_map(bits: np.ndarray) -> np.ndarray:
    """Mark foreground pixels with a background (or out-of-frame) 4-neighbor."""
    fg = bits.astype(bool, copy=False)
    bg = ~fg
    boundary = np.zeros_like(fg)
    # out-of-frame counts as background
    boundary[0, :] |= fg[0, :]
    boundary[-1, :] |= fg[-1, :]
    boundary[:, 0] |= fg[:, 0]
    boundary[:, -1] |= fg[:, -1]
    boundary[1:, :] |= fg[1:, :] & bg[:-1, :]
    boundary[:-1, :] |= fg[:-1, :] & bg[1:, :]
    boundary[:, 1:] |= fg[:, 1:] & bg[:, :-1]
    boundary[:, :-1] |= fg[:, :-1] & bg[:, 1:]
    return boundary.astype(np.uint8)


def _dilate_square(bits: np.ndarray, radius: int) -> np.ndarray:
    """Dilate with a (2r+1)x(2r+1) square element (separable max filter)."""
    out = bits.astype(bool, copy=True)
    for axis in (0, 1):
        size = out.shape[axis]
        acc = out.copy()
        for shift in range(1, min(radius, size - 1) + 1):
            shifted = np.zeros_like(out)
            if axis == 0:
                shifted[shift:, :] = out[: size - shift, :]
                acc |= shifted
                shifted = np.zeros_like(out)
                shifted[: size - shift, :] = out[shift:, :]
            else:
                shifted[:, shift:] = out[:, : size - shift]
                acc |= shifted
                shifted = np.zeros_like(out)
                shifted[:, : size - shift] = out[:, shift:]
            acc |= shifted
        out = acc
    return out


def boundary_match_counts(pred_boundary: np.ndarray, gt_boundary: np.ndarray, tolerance: int):
    """Count boundary pixels matched within a Chebyshev distance tolerance.

    Returns (pred_matched, pred_total, gt_matched, gt_total). A pixel matches
    when a counterpart boundary pixel lies within ``tolerance`` in Chebyshev
    distance, i.e. inside a (2t+1)-square neighborhood.
    """
    pb = pred_boundary.astype(bool, copy=False)
    gb = gt_boundary.astype(bool, copy=False)
    pred_total = int(np.count_nonzero(pb))
    gt_total = int(np.count_nonzero(gb))
    if pred_total == 0 or gt_total == 0:
        return 0, pred_total, 0, gt_total
    gb_dilated = _dilate_square(gb, tolerance)
    pb_dilated = _dilate_square(pb, tolerance)
    pred_matched = int(np.count_nonzero(pb & gb_dilated))
    gt_matched = int(np.count_nonzero(gb & pb_dilated))
    return pred_matched, pred_total, gt_matched, gt_total


def kts_scatter_table(gram: np.ndarray) -> np.ndarray:
    """Within-segment scatter for every half-open segment of a kernel matrix.

    ``table[a, b]`` is the scatter of frames a..b-1:
    sum_i K_ii - (sum_ij K_ij) / (b - a). Entries with b <= a are zero.
    Scatter is mathematically nonnegative; tiny negative float residue is
    clamped to zero.
    """
    n = gram.shape[0]
    diag_cum = np.concatenate(([0.0], np.cumsum(np.diag(gram))))
    block = np.zeros((n + 1, n + 1))
    block[1:, 1:] = np.cumsum(np.cumsum(gram, axis=0), axis=1)

    a = np.arange(n + 1).reshape(-1, 1)
    b = np.arange(n + 1).reshape(1, -1)
    length = (b - a).astype(np.float64)
    length[length <= 0] = 1.0  # avoid divide-by-zero on the dead triangle

    block_sum = block[b, b] - block[a, b] - block[b, a] + block[a, a]
    table = (diag_cum[b] - diag_cum[a]) - block_sum / length
    table[b <= a] = 0.0
    np.maximum(table, 0.0, out=table)
    return table


def kts_dp(scatter: np.ndarray, max_changes: int):
    """Dynamic program over change-point counts 0..max_changes.

    ``scatter`` is the table from :func:`kts_scatter_table` for n frames.
    Returns (objectives, parents): objectives[m] is the minimal total scatter
    using m interior change points; parents[m, l] is the argmin split point
    for the prefix of length l (first minimum wins on ties).
    """
    n = scatter.shape[0] - 1
    m_max = int(max_changes)
    cost = np.full((m_max + 1, n + 1), np.inf)
    parents = np.zeros((m_max + 1, n + 1), dtype=np.int64)
    cost[0, 1:] = scatter[0, 1:]
    for k in range(1, m_max + 1):
        for l in range(k + 1, n + 1):
            t_lo, t_hi = k, l  # split point t in [k, l-1]
            candidates = cost[k - 1, t_lo:t_hi] + scatter[t_lo:t_hi, l]
            best = int(np.argmin(candidates))
            cost[k, l] = candidates[best]
            parents[k, l] = t_lo + best
    return cost[:, n].copy(), parents
