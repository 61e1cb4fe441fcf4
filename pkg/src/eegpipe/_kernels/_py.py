"""Pure-python kernel fallback.

Same contracts as the compiled extension. The IIR recursion cannot be
vectorized (each output feeds the next state), so `lfilter` here pays a
per-sample python loop; everything else stays in numpy.
"""

import numpy as np


def lfilter(b, a, x, zi):
    """Direct form II transposed IIR filter.

    `b` and `a` must have equal length with a[0] == 1; `zi` is the initial
    state vector of length len(b) - 1. Returns the filtered series.
    """
    b = np.asarray(b, dtype=np.float64)
    a = np.asarray(a, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    m = b.shape[0] - 1
    if m == 0:
        return b[0] * x
    z = list(np.asarray(zi, dtype=np.float64))
    bl = list(b)
    al = list(a)
    y = np.empty_like(x)
    for i in range(x.shape[0]):
        xi = x[i]
        yi = bl[0] * xi + z[0]
        for j in range(m - 1):
            z[j] = bl[j + 1] * xi + z[j + 1] - al[j + 1] * yi
        z[m - 1] = bl[m] * xi - al[m] * yi
        y[i] = yi
    return y


def windowed_sumsq(x, win, step, nwin):
    """Sum of squares over `nwin` windows of `win` samples, `step` apart."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty(nwin, dtype=np.float64)
    for j in range(nwin):
        seg = x[j * step: j * step + win]
        out[j] = np.dot(seg, seg)
    return out


def maxpool_columns(values, target):
    """Max over `target` contiguous column groups whose sizes differ by <= 1."""
    values = np.asarray(values, dtype=np.float64)
    ncols = values.shape[1]
    bounds = (np.arange(target + 1) * ncols) // target
    out = np.empty((values.shape[0], target), dtype=np.float64)
    for j in range(target):
        out[:, j] = values[:, bounds[j]:bounds[j + 1]].max(axis=1)
    return out
