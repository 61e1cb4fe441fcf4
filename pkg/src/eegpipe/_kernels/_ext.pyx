# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops: IIR recursion, windowed power sums, column max-pooling."""

import numpy as np


def lfilter(double[::1] b, double[::1] a, double[::1] x, double[::1] zi):
    """Direct form II transposed IIR filter.

    `b` and `a` must have equal length with a[0] == 1; `zi` is the initial
    state vector of length len(b) - 1. Returns the filtered series.
    """
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t m = b.shape[0] - 1
    out_arr = np.empty(n, dtype=np.float64)
    if m == 0:
        np.multiply(b[0], np.asarray(x), out=out_arr)
        return out_arr
    z_arr = np.ascontiguousarray(zi, dtype=np.float64).copy()
    cdef double[::1] y = out_arr
    cdef double[::1] z = z_arr
    cdef double xi, yi
    cdef Py_ssize_t i, j
    for i in range(n):
        xi = x[i]
        yi = b[0] * xi + z[0]
        for j in range(m - 1):
            z[j] = b[j + 1] * xi + z[j + 1] - a[j + 1] * yi
        z[m - 1] = b[m] * xi - a[m] * yi
        y[i] = yi
    return out_arr


def windowed_sumsq(double[::1] x, Py_ssize_t win, Py_ssize_t step, Py_ssize_t nwin):
    """Sum of squares over `nwin` windows of `win` samples, `step` apart."""
    out_arr = np.empty(nwin, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double acc
    cdef Py_ssize_t j, k, base
    for j in range(nwin):
        base = j * step
        acc = 0.0
        for k in range(win):
            acc += x[base + k] * x[base + k]
        out[j] = acc
    return out_arr


def maxpool_columns(double[:, ::1] values, Py_ssize_t target):
    """Max over `target` contiguous column groups whose sizes differ by <= 1."""
    cdef Py_ssize_t nrows = values.shape[0]
    cdef Py_ssize_t ncols = values.shape[1]
    out_arr = np.empty((nrows, target), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j, k, lo, hi
    cdef double best
    for i in range(nrows):
        for j in range(target):
            lo = (j * ncols) // target
            hi = ((j + 1) * ncols) // target
            best = values[i, lo]
            for k in range(lo + 1, hi):
                if values[i, k] > best:
                    best = values[i, k]
            out[i, j] = best
    return out_arr
