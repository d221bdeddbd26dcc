# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled versions of the hot kernels.

Must return results identical to ``_numpy_impl``; the parity tests enforce
this whenever the extension is importable.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND_NAME = "compiled"


def mask_overlap(a, b):
    cdef cnp.ndarray[cnp.uint8_t, ndim=2] av = np.ascontiguousarray(a, dtype=np.uint8)
    cdef cnp.ndarray[cnp.uint8_t, ndim=2] bv = np.ascontiguousarray(b, dtype=np.uint8)
    cdef Py_ssize_t h = av.shape[0], w = av.shape[1]
    cdef Py_ssize_t i, j
    cdef long inter = 0, union_ = 0
    cdef int pa, pb
    for i in range(h):
        for j in range(w):
            pa = av[i, j] != 0
            pb = bv[i, j] != 0
            inter += pa & pb
            union_ += pa | pb
    return int(inter), int(union_)


def boundary_map(bits):
    cdef cnp.ndarray[cnp.uint8_t, ndim=2] fg = np.ascontiguousarray(bits, dtype=np.uint8)
    cdef Py_ssize_t h = fg.shape[0], w = fg.shape[1]
    cdef cnp.ndarray[cnp.uint8_t, ndim=2] out = np.zeros((h, w), dtype=np.uint8)
    cdef Py_ssize_t i, j
    for i in range(h):
        for j in range(w):
            if fg[i, j] == 0:
                continue
            if i == 0 or i == h - 1 or j == 0 or j == w - 1:
                out[i, j] = 1
            elif fg[i - 1, j] == 0 or fg[i + 1, j] == 0 or fg[i, j - 1] == 0 or fg[i, j + 1] == 0:
                out[i, j] = 1
    return out


def boundary_match_counts(pred_boundary, gt_boundary, tolerance):
    cdef cnp.ndarray[cnp.uint8_t, ndim=2] pb = np.ascontiguousarray(pred_boundary, dtype=np.uint8)
    cdef cnp.ndarray[cnp.uint8_t, ndim=2] gb = np.ascontiguousarray(gt_boundary, dtype=np.uint8)
    cdef Py_ssize_t h = pb.shape[0], w = pb.shape[1]
    cdef int tol = tolerance
    cdef Py_ssize_t i, j, di, dj, lo_i, hi_i, lo_j, hi_j
    cdef long pred_total = 0, gt_total = 0, pred_matched = 0, gt_matched = 0
    cdef int found

    for i in range(h):
        for j in range(w):
            pred_total += pb[i, j] != 0
            gt_total += gb[i, j] != 0
    if pred_total == 0 or gt_total == 0:
        return 0, int(pred_total), 0, int(gt_total)

    for i in range(h):
        for j in range(w):
            if pb[i, j] == 0 and gb[i, j] == 0:
                continue
            lo_i = i - tol if i - tol > 0 else 0
            hi_i = i + tol if i + tol < h - 1 else h - 1
            lo_j = j - tol if j - tol > 0 else 0
            hi_j = j + tol if j + tol < w - 1 else w - 1
            if pb[i, j] != 0:
                found = 0
                for di in range(lo_i, hi_i + 1):
                    for dj in range(lo_j, hi_j + 1):
                        if gb[di, dj] != 0:
                            found = 1
                            break
                    if found:
                        break
                pred_matched += found
            if gb[i, j] != 0:
                found = 0
                for di in range(lo_i, hi_i + 1):
                    for dj in range(lo_j, hi_j + 1):
                        if pb[di, dj] != 0:
                            found = 1
                            break
                    if found:
                        break
                gt_matched += found
    return int(pred_matched), int(pred_total), int(gt_matched), int(gt_total)


def kts_scatter_table(gram):
    cdef cnp.ndarray[cnp.float64_t, ndim=2] K = np.ascontiguousarray(gram, dtype=np.float64)
    cdef Py_ssize_t n = K.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] diag_cum = np.zeros(n + 1, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] colcum = np.zeros((n + 1, n + 1), dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] block = np.zeros((n + 1, n + 1), dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] table = np.zeros((n + 1, n + 1), dtype=np.float64)
    cdef Py_ssize_t i, j, a, b
    cdef double block_sum, value

    for i in range(n):
        diag_cum[i + 1] = diag_cum[i] + K[i, i]
    # two sequential passes so the accumulation order (and therefore the
    # float rounding) matches np.cumsum(np.cumsum(K, 0), 1) exactly
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            colcum[i, j] = colcum[i - 1, j] + K[i - 1, j - 1]
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            block[i, j] = block[i, j - 1] + colcum[i, j]

    for a in range(n + 1):
        for b in range(a + 1, n + 1):
            block_sum = block[b, b] - block[a, b] - block[b, a] + block[a, a]
            value = (diag_cum[b] - diag_cum[a]) - block_sum / (b - a)
            table[a, b] = value if value > 0.0 else 0.0
    return table


def kts_dp(scatter, max_changes):
    cdef cnp.ndarray[cnp.float64_t, ndim=2] S = np.ascontiguousarray(scatter, dtype=np.float64)
    cdef Py_ssize_t n = S.shape[0] - 1
    cdef Py_ssize_t m_max = max_changes
    cdef cnp.ndarray[cnp.float64_t, ndim=2] cost = np.full((m_max + 1, n + 1), np.inf)
    cdef cnp.ndarray[cnp.int64_t, ndim=2] parents = np.zeros((m_max + 1, n + 1), dtype=np.int64)
    cdef Py_ssize_t k, l, t
    cdef double best, candidate
    cdef Py_ssize_t best_t

    for l in range(1, n + 1):
        cost[0, l] = S[0, l]
    for k in range(1, m_max + 1):
        for l in range(k + 1, n + 1):
            best = np.inf
            best_t = k
            for t in range(k, l):
                candidate = cost[k - 1, t] + S[t, l]
                if candidate < best:
                    best = candidate
                    best_t = t
            cost[k, l] = best
            parents[k, l] = best_t
    return cost[:, n].copy(), parents
