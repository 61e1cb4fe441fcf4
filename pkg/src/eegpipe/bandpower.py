"""Sliding-window per-band power matrices.

One matrix per electrode: row i is the windowed power of the band-i filtered
signal, columns step through time. Window power divides the in-window sum of
squares by the window length in seconds, so a constant-1 signal at 250 Hz
with a 5 s window scores 250.0. Only full windows are emitted; the nominal
count n/(fs*step) (which can overrun the series) is kept alongside for
reporting.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .filters import BandSpec, band_filter, apply_zero_phase

DEFAULT_WINDOW_S = 5.0
DEFAULT_STEP_S = 2.0


@dataclass
class PowerMatrix:
    """Bands x windows power values for one electrode."""
    electrode: str
    bands: tuple[BandSpec, ...]
    values: np.ndarray        # shape (len(bands), n_windows)
    window_s: float
    step_s: float
    fs: float
    times: np.ndarray         # window start time of each column, seconds
    nominal_windows: int      # n / (fs * step), ignoring window overrun

    @property
    def n_windows(self) -> int:
        return self.values.shape[1]


def n_full_windows(n_samples: int, fs: float, window_s: float, step_s: float) -> int:
    """Number of windows that fit entirely inside the series."""
    win = int(round(window_s * fs))
    step = int(round(step_s * fs))
    if n_samples < win:
        return 0
    return (n_samples - win) // step + 1


def window_power(x, window_s: float, step_s: float, j: int, fs: float) -> float:
    """Power of window j: sum of squares over fs*window_s samples starting at
    fs*step_s*j, divided by the window length in seconds."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    if window_s <= 0 or step_s <= 0:
        raise ValueError("window and step must be positive")
    win = int(round(window_s * fs))
    step = int(round(step_s * fs))
    start = step * j
    if start < 0 or start + win > len(x):
        raise ValueError(f"window {j} spans [{start}, {start + win}) beyond "
                         f"series of {len(x)} samples")
    total = _kernels.windowed_sumsq(x[start:start + win], win, win, 1)[0]
    return float(total / window_s)


def power_series(x, window_s: float, step_s: float, fs: float) -> np.ndarray:
    """window_power evaluated at every full window index."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    win = int(round(window_s * fs))
    step = int(round(step_s * fs))
    nwin = n_full_windows(len(x), fs, window_s, step_s)
    if nwin == 0:
        raise ValueError(f"series of {len(x)} samples is shorter than one "
                         f"{window_s} s window at fs={fs}")
    sums = _kernels.windowed_sumsq(x, win, step, nwin)
    return sums / window_s


def power_matrix(bands: tuple[BandSpec, ...], x, window_s: float = DEFAULT_WINDOW_S,
                 step_s: float = DEFAULT_STEP_S, fs: float = 250.0,
                 electrode: str = "", filter_order: int = 5) -> PowerMatrix:
    """Band-decompose a series once, then window the power of every band."""
    x = np.asarray(x, dtype=np.float64)
    if not bands:
        raise ValueError("empty band list")
    nwin = n_full_windows(len(x), fs, window_s, step_s)
    if nwin == 0:
        raise ValueError(f"series of {len(x)} samples is shorter than one "
                         f"{window_s} s window at fs={fs}")
    values = np.empty((len(bands), nwin))
    for i, band in enumerate(bands):
        filtered = apply_zero_phase(band_filter(band, fs, filter_order), x)
        values[i] = power_series(filtered, window_s, step_s, fs)
    step = int(round(step_s * fs))
    times = np.arange(nwin) * step / fs
    return PowerMatrix(electrode=electrode, bands=tuple(bands), values=values,
                       window_s=window_s, step_s=step_s, fs=fs, times=times,
                       nominal_windows=int(len(x) // step))


def short_term_samples(mats: list[PowerMatrix], electrodes: tuple[str, ...] | list[str]):
    """One feature row per window index: the per-band powers of every selected
    electrode concatenated, columns named "<electrode>_<band>"."""
    from .features import FeatureTable

    by_name = {m.electrode: m for m in mats}
    missing = [e for e in electrodes if e not in by_name]
    if missing:
        raise ValueError(f"no power matrix for electrode(s) {missing}")
    chosen = [by_name[e] for e in electrodes]
    first = chosen[0]
    for m in chosen[1:]:
        if m.n_windows != first.n_windows:
            raise ValueError(f"window count mismatch: {m.electrode} has "
                             f"{m.n_windows}, {first.electrode} has {first.n_windows}")
        if tuple(b.name for b in m.bands) != tuple(b.name for b in first.bands):
            raise ValueError(f"band mismatch between {m.electrode} and {first.electrode}")
    names = [f"{m.electrode}_{band.name}" for m in chosen for band in m.bands]
    rows = np.hstack([m.values.T for m in chosen])
    return FeatureTable(feature_names=tuple(names), rows=rows)


def save_csv(mat: PowerMatrix, path) -> None:
    """Header row of window start times (s), then one row per band."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("band," + ",".join(repr(float(t)) for t in mat.times) + "\n")
        for band, row in zip(mat.bands, mat.values):
            fh.write(band.name + "," + ",".join(repr(float(v)) for v in row) + "\n")


def load_csv(path) -> tuple[list[str], np.ndarray, np.ndarray]:
    """Inverse of save_csv: returns (band names, window times, values)."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        times = np.array([float(v) for v in header[1:]])
        names, rows = [], []
        for line in fh:
            parts = line.strip().split(",")
            names.append(parts[0])
            rows.append([float(v) for v in parts[1:]])
    return names, times, np.asarray(rows)
