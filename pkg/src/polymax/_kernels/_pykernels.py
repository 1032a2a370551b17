"""Pure-Python/numpy fallback for the hot per-sample kernels.

Semantics (and, for the design matrix, bit patterns) match the compiled
extension exactly: every matrix entry is the same left-to-right product
of float64 lag values, and the reflected CUSUM recursion runs in the
same order with the same float64 operations.
"""

from itertools import combinations_with_replacement

import numpy as np


def lag_design_matrix(x, m, degree=2):
    """Monomial lag-product design matrix.

    Row t corresponds to sample index n = m - 1 + t of ``x`` and holds the
    basis values x[n-i1]*...*x[n-ip] for p = 1..degree, index tuples
    0 <= i1 <= ... <= ip <= m-1 in lexicographic order within each p.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    rows = x.shape[0] - m + 1
    if rows <= 0:
        raise ValueError("signal shorter than the lag window")
    # lags[i][t] = x[n - i] for n = m-1+t
    lags = [x[m - 1 - i : m - 1 - i + rows] for i in range(m)]
    cols = []
    for p in range(1, degree + 1):
        for idx in combinations_with_replacement(range(m), p):
            col = lags[idx[0]].copy()
            for i in idx[1:]:
                col = col * lags[i]
            cols.append(col)
    return np.column_stack(cols)


def cusum_trace(scores):
    """Reflected cumulative sums T[n] = max(0, T[n-1] + scores[n])."""
    scores = np.asarray(scores, dtype=np.float64)
    out = np.empty_like(scores)
    t = 0.0
    s = scores.tolist()
    for n, v in enumerate(s):
        t = t + v
        if t < 0.0:
            t = 0.0
        out[n] = t
    return out
