"""Continuous wavelet transform with a complex Morlet wavelet.

The mother wavelet is psi(u) = (pi*f_b)^(-1/2) * exp(2*pi*i*f_c*u)
* exp(-u^2 / f_b). Scales are dimensionless sample-domain stretch factors; a
scale s responds most strongly to f_c * fs / s Hz. The default grid s_k = 2k
for k = 1..150 spans fs/2 down to fs/300. Scalogram values are squared
coefficient magnitudes (power); squaring happens before any downsampling or
baseline referencing.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import _kernels

DEFAULT_SCALE_COUNT = 150


@dataclass(frozen=True)
class MorletParams:
    """Center frequency and bandwidth of the complex Morlet wavelet."""
    f_c: float = 1.0
    f_b: float = 1.5

    def __post_init__(self):
        if self.f_c <= 0 or self.f_b <= 0:
            raise ValueError(f"f_c and f_b must be positive, got ({self.f_c}, {self.f_b})")


DEFAULT_MORLET = MorletParams()


@dataclass
class Scalogram:
    """Scales x time matrix of wavelet power for one electrode."""
    electrode: str
    scales: np.ndarray        # strictly increasing
    times: np.ndarray         # column timestamps, seconds
    values: np.ndarray        # shape (len(scales), len(times))
    fs: float
    params: MorletParams
    referenced: bool = False
    coi_s: np.ndarray | None = None  # per-scale edge width (seconds) where
                                     # boundary effects dominate

    @property
    def n_scales(self) -> int:
        return self.values.shape[0]

    @property
    def n_times(self) -> int:
        return self.values.shape[1]

    def freqs(self) -> np.ndarray:
        return scale_to_freq(self.scales, self.fs, self.params)


def scale_grid(fs: float, count: int = DEFAULT_SCALE_COUNT) -> np.ndarray:
    """Scales s_k = 2k for k = 1..count, covering fs/2 down to fs/(2*count)."""
    if count < 1:
        raise ValueError(f"need at least one scale, got {count}")
    if fs <= 0:
        raise ValueError(f"sampling rate must be positive, got {fs}")
    return 2.0 * np.arange(1, count + 1)


def scale_to_freq(s, fs: float, params: MorletParams = DEFAULT_MORLET):
    """Pseudo-frequency of a scale: f_c * fs / s."""
    s = np.asarray(s, dtype=np.float64)
    if np.any(s <= 0):
        raise ValueError("scales must be positive")
    out = params.f_c * fs / s
    return float(out) if out.ndim == 0 else out


def _morlet_kernel(scale: float, params: MorletParams, tol: float = 1e-8) -> np.ndarray:
    """Sampled conjugate wavelet for correlation-style convolution, support
    truncated where the Gaussian envelope falls below `tol`."""
    half = int(np.ceil(scale * np.sqrt(params.f_b * np.log(1.0 / tol))))
    u = np.arange(-half, half + 1) / scale
    envelope = np.exp(-u * u / params.f_b) / np.sqrt(np.pi * params.f_b)
    return envelope * np.exp(-2j * np.pi * params.f_c * u)


def cwt(x, fs: float, scales=None, params: MorletParams = DEFAULT_MORLET,
        electrode: str = "") -> Scalogram:
    """Wavelet power of a series at each scale, via FFT convolution with
    zero padding. Columns are aligned with the input samples."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("expected a non-empty 1-D series")
    if scales is None:
        scales = scale_grid(fs)
    scales = np.asarray(scales, dtype=np.float64)
    if np.any(np.diff(scales) <= 0) or np.any(scales <= 0):
        raise ValueError("scales must be positive and strictly increasing")
    n = x.size
    widest = _morlet_kernel(float(scales[-1]), params)
    if widest.size > 2 * n:
        raise ValueError(f"largest scale {scales[-1]} has support {widest.size} "
                         f"samples, more than twice the series length {n}")
    nfft = 1 << int(n + widest.size - 1).bit_length()
    fx = np.fft.fft(x, nfft)
    values = np.empty((scales.size, n))
    for i, s in enumerate(scales):
        kern = _morlet_kernel(float(s), params)
        half = kern.size // 2
        conv = np.fft.ifft(fx * np.fft.fft(kern, nfft))
        row = conv[half:half + n] / np.sqrt(s)
        values[i] = row.real ** 2 + row.imag ** 2
    coi = np.sqrt(params.f_b) * scales / fs
    return Scalogram(electrode=electrode, scales=scales, times=np.arange(n) / fs,
                     values=values, fs=fs, params=params, coi_s=coi)


def downsample_max(sg: Scalogram, target_cols: int) -> Scalogram:
    """Shrink the time axis to `target_cols` by taking the max over contiguous
    column groups whose sizes differ by at most one."""
    if target_cols < 1:
        raise ValueError(f"target_cols must be >= 1, got {target_cols}")
    if target_cols > sg.n_times:
        raise ValueError(f"cannot grow: {target_cols} > {sg.n_times} columns")
    if target_cols == sg.n_times:
        return replace(sg, values=sg.values.copy(), times=sg.times.copy())
    values = _kernels.maxpool_columns(np.ascontiguousarray(sg.values), target_cols)
    bounds = (np.arange(target_cols) * sg.n_times) // target_cols
    return replace(sg, values=values, times=sg.times[bounds])


def baseline_reference(sg: Scalogram, baseline: Scalogram) -> Scalogram:
    """Subtract the baseline's per-scale mean power from every column."""
    if baseline.referenced:
        raise ValueError("baseline scalogram is already referenced")
    if sg.scales.shape != baseline.scales.shape or not np.allclose(sg.scales, baseline.scales):
        raise ValueError("scale grids differ between scalogram and baseline")
    column = baseline.values.mean(axis=1, keepdims=True)
    return replace(sg, values=sg.values - column, referenced=True)


def export_image(sg: Scalogram, path) -> None:
    """Write the scalogram as a binary portable graymap, min..max mapped
    affinely to 0..255 (constant matrices map to 0)."""
    v = sg.values
    if not np.isfinite(v).all():
        raise ValueError("scalogram contains non-finite values")
    lo, hi = float(v.min()), float(v.max())
    if hi > lo:
        pixels = np.rint((v - lo) / (hi - lo) * 255.0).astype(np.uint8)
    else:
        pixels = np.zeros(v.shape, dtype=np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{v.shape[1]} {v.shape[0]}\n255\n".encode("ascii"))
        fh.write(pixels.tobytes())


def save_csv(sg: Scalogram, path) -> None:
    """Scale value in the first column, then one power value per timestamp."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("scale," + ",".join(repr(float(t)) for t in sg.times) + "\n")
        for s, row in zip(sg.scales, sg.values):
            fh.write(repr(float(s)) + "," + ",".join(repr(float(v)) for v in row) + "\n")
