#!/usr/bin/env python3
"""Compare the compiled kernels against the pure-python fallback on
pipeline-realistic sizes (180 s of 250 Hz signal).

Run:  python benchmarks/bench_kernels.py
"""

import time

import numpy as np

from eegpipe._kernels import _py

try:
    from eegpipe._kernels import _ext
except ImportError:
    _ext = None


def timeit(fn, *args, repeat=3):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    rng = np.random.default_rng(0)
    n = 45_000                      # 180 s at 250 Hz
    x = rng.standard_normal(n)

    order = 5
    b = rng.standard_normal(2 * order + 1) * 0.05
    a = np.concatenate([[1.0], rng.uniform(-0.2, 0.2, 2 * order)])
    zi = np.zeros(2 * order)

    scalogram = rng.standard_normal((150, n))

    cases = [
        ("lfilter (order-10 ba, 45k samples)", "lfilter", (b, a, x, zi)),
        ("windowed_sumsq (5 s win, 2 s step)", "windowed_sumsq", (x, 1250, 500, 88)),
        ("maxpool_columns (150x45k -> 150x150)", "maxpool_columns", (scalogram, 150)),
    ]

    print(f"{'kernel':<40} {'python':>10} {'ext':>10} {'speedup':>9}")
    for label, name, args in cases:
        t_py = timeit(getattr(_py, name), *args)
        if _ext is None:
            print(f"{label:<40} {t_py * 1e3:>8.2f}ms {'n/a':>10} {'n/a':>9}")
            continue
        t_ext = timeit(getattr(_ext, name), *args)
        np.testing.assert_allclose(getattr(_ext, name)(*args),
                                   getattr(_py, name)(*args), rtol=1e-9, atol=1e-12)
        print(f"{label:<40} {t_py * 1e3:>8.2f}ms {t_ext * 1e3:>8.2f}ms "
              f"{t_py / t_ext:>8.1f}x")
    if _ext is None:
        print("\ncompiled kernels not built; showing fallback timings only")


if __name__ == "__main__":
    main()
