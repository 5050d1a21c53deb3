# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled score-binning kernels.

Both binning kernels place each score ``s`` into bin ``k = #{thresholds < s}``,
count exact ties ``s == thresholds[k]`` in ``equal[k]`` and keep the largest
non-tied score of each bin in ``binmax[k]`` (``-inf`` when empty).
``thresholds`` must be sorted ascending with no duplicates.

The lower bound is found through a uniform grid over the threshold range:
``cell(s)`` is monotone in ``s``, so every threshold in an earlier cell is
below ``s`` and every threshold in a later cell is above it.  Only the
thresholds sharing ``s``'s cell are scanned, which keeps the result exact.
"""

from cython.parallel cimport prange
from libc.stdint cimport int64_t
from libc.stdlib cimport free, malloc

import numpy as np


cdef struct Grid:
    double lo
    double scale
    Py_ssize_t ncell
    Py_ssize_t* start


cdef inline Py_ssize_t _cell(const Grid* g, double s) noexcept nogil:
    cdef double x = (s - g.lo) * g.scale
    if x < 0.0:
        return 0
    if x >= <double>(g.ncell - 1):
        return g.ncell - 1
    return <Py_ssize_t>x


cdef int _grid_init(Grid* g, const double* t, Py_ssize_t T) except -1:
    cdef Py_ssize_t k, c, prev
    g.ncell = 2 * T + 2
    g.lo = t[0] if T > 0 else 0.0
    if T > 1 and t[T - 1] > t[0]:
        g.scale = (g.ncell - 1) / (t[T - 1] - t[0])
    else:
        g.scale = 1.0
    g.start = <Py_ssize_t*> malloc(g.ncell * sizeof(Py_ssize_t))
    if g.start == NULL:
        raise MemoryError()
    # start[c] = first threshold index whose cell is >= c
    prev = 0
    for k in range(T):
        c = _cell(g, t[k])
        while prev <= c:
            g.start[prev] = k
            prev += 1
    while prev < g.ncell:
        g.start[prev] = T
        prev += 1
    return 0


cdef inline Py_ssize_t _lower_bound(const Grid* g, const double* t, Py_ssize_t T, double s) noexcept nogil:
    cdef Py_ssize_t k = g.start[_cell(g, s)]
    while k < T and t[k] < s:
        k += 1
    return k


def bin_block(const double[:, ::1] block, Py_ssize_t row_offset,
              const double[::1] thresholds, int64_t[::1] hist, int64_t[::1] equal,
              double[::1] binmax, bint skip_diagonal):
    """Bin every entry of a score block; entry ``(r, c)`` is skipped when
    ``skip_diagonal`` and ``row_offset + r == c``."""
    cdef Py_ssize_t m = block.shape[0], n = block.shape[1], T = thresholds.shape[0]
    cdef Py_ssize_t r, c, k
    cdef double s
    cdef Grid g
    if hist.shape[0] != T + 1 or equal.shape[0] != T or binmax.shape[0] != T + 1:
        raise ValueError("hist and binmax need len(thresholds) + 1 entries, equal len(thresholds)")
    if T == 0:
        raise ValueError("at least one threshold is required")
    cdef const double* t = &thresholds[0]
    _grid_init(&g, t, T)
    try:
        with nogil:
            for r in range(m):
                for c in range(n):
                    if skip_diagonal and row_offset + r == c:
                        continue
                    s = block[r, c]
                    k = _lower_bound(&g, t, T, s)
                    hist[k] += 1
                    if k < T and t[k] == s:
                        equal[k] += 1
                    elif s > binmax[k]:
                        binmax[k] = s
    finally:
        free(g.start)


def bin_values(const double[::1] values, const double[::1] thresholds,
               int64_t[::1] hist, int64_t[::1] equal, double[::1] binmax):
    cdef Py_ssize_t n = values.shape[0], T = thresholds.shape[0], i, k
    cdef double s
    cdef Grid g
    if hist.shape[0] != T + 1 or equal.shape[0] != T or binmax.shape[0] != T + 1:
        raise ValueError("hist and binmax need len(thresholds) + 1 entries, equal len(thresholds)")
    if T == 0:
        raise ValueError("at least one threshold is required")
    cdef const double* t = &thresholds[0]
    _grid_init(&g, t, T)
    try:
        with nogil:
            for i in range(n):
                s = values[i]
                k = _lower_bound(&g, t, T, s)
                hist[k] += 1
                if k < T and t[k] == s:
                    equal[k] += 1
                elif s > binmax[k]:
                    binmax[k] = s
    finally:
        free(g.start)


def rowwise_dot(const double[:, ::1] a, const double[:, ::1] b,
                const int64_t[::1] ia, const int64_t[::1] ib):
    """``out[q] = dot(a[ia[q]], b[ib[q]])`` with a fixed left-to-right summation."""
    cdef Py_ssize_t q, j, nq = ia.shape[0], p = a.shape[1]
    cdef double acc
    out = np.empty(nq, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for q in prange(nq, schedule="static"):
            acc = 0.0
            for j in range(p):
                acc = acc + a[ia[q], j] * b[ib[q], j]
            o[q] = acc
    return out
