# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled row scatter kernels.

Both kernels walk the source rows in order, so accumulation order matches
the numpy fallback exactly.
"""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def scatter_add_rows(const double[:, ::1] src, const long long[::1] index, Py_ssize_t n):
    cdef Py_ssize_t rows = src.shape[0], cols = src.shape[1]
    out_arr = np.zeros((n, cols), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t k, c, t
    for k in range(rows):
        t = index[k]
        if t < 0 or t >= n:
            raise IndexError(f"segment index {t} out of range for {n} segments")
        for c in range(cols):
            out[t, c] += src[k, c]
    return out_arr


def segment_max_rows(const double[:, ::1] src, const long long[::1] index, Py_ssize_t n):
    cdef Py_ssize_t rows = src.shape[0], cols = src.shape[1]
    out_arr = np.zeros((n, cols), dtype=np.float64)
    arg_arr = np.full((n, cols), -1, dtype=np.int64)
    cdef double[:, ::1] out = out_arr
    cdef long long[:, ::1] arg = arg_arr
    cdef Py_ssize_t k, c, t
    for k in range(rows):
        t = index[k]
        if t < 0 or t >= n:
            raise IndexError(f"segment index {t} out of range for {n} segments")
        for c in range(cols):
            if arg[t, c] < 0 or src[k, c] > out[t, c]:
                out[t, c] = src[k, c]
                arg[t, c] = k
    return out_arr, arg_arr
