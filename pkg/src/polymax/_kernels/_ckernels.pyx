# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: lag-product design expansion and CUSUM recursion."""

from itertools import combinations_with_replacement

import numpy as np

cimport numpy as cnp

cnp.import_array()


def lag_design_matrix(x, int m, int degree=2):
    """Monomial lag-product design matrix (see the pure-Python twin)."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t rows = xv.shape[0] - m + 1
    if rows <= 0:
        raise ValueError("signal shorter than the lag window")

    tuples = []
    for p in range(1, degree + 1):
        tuples.extend(combinations_with_replacement(range(m), p))
    cdef Py_ssize_t ncols = len(tuples)

    # flat index table: tuples padded to max length, lengths alongside
    cdef Py_ssize_t maxp = degree
    cdef cnp.ndarray[cnp.int64_t, ndim=2] idx = np.zeros((ncols, maxp), dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] plen = np.zeros(ncols, dtype=np.int64)
    cdef Py_ssize_t c, k
    for c in range(ncols):
        tup = tuples[c]
        plen[c] = len(tup)
        for k in range(len(tup)):
            idx[c, k] = tup[k]

    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((rows, ncols), dtype=np.float64)
    cdef Py_ssize_t t, n
    cdef double v
    for t in range(rows):
        n = m - 1 + t
        for c in range(ncols):
            v = xv[n - idx[c, 0]]
            for k in range(1, plen[c]):
                v = v * xv[n - idx[c, k]]
            out[t, c] = v
    return out


def cusum_trace(scores):
    """Reflected cumulative sums T[n] = max(0, T[n-1] + scores[n])."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] s = np.ascontiguousarray(scores, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty_like(s)
    cdef double t = 0.0
    cdef Py_ssize_t n
    for n in range(s.shape[0]):
        t = t + s[n]
        if t < 0.0:
            t = 0.0
        out[n] = t
    return out
