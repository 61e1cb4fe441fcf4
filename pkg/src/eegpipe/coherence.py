"""Welch spectral estimation, magnitude-squared coherence, and connectivity
scores.

Coherence of a channel pair is |cross spectrum|^2 / (psd_u * psd_v) on a
shared frequency grid, estimated from Hann-windowed overlapping segments.
Averaging at least two segments is required; a single segment makes the
ratio identically one. The per-pair connectivity scalar is the frequency
average of the coherence (trapezoidal, normalized by the spanned bandwidth),
optionally restricted to a band. Hemispheric scores average that scalar over
the 10 electrode pairs within each hemisphere's 5-electrode set.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .filters import DEFAULT_BANDS, BandSpec
from .recording import LEFT_ELECTRODES, RIGHT_ELECTRODES, Recording

DEFAULT_SEGMENT_S = 2.0
DEFAULT_OVERLAP = 0.5

# Estimator floating error can push the ratio past 1 by at most this much;
# anything larger indicates a bug, not rounding.
CLAMP_TOL = 1e-9


@dataclass
class SpectralEstimate:
    """Averaged auto- and cross-spectra of two equal-length series."""
    freqs: np.ndarray
    psd_u: np.ndarray
    psd_v: np.ndarray
    cross: np.ndarray         # complex
    segments: int


@dataclass
class PairCoherence:
    electrode_i: str
    electrode_j: str
    c2: np.ndarray            # coherence per frequency bin
    p: float                  # frequency-averaged coherence
    band_p: dict[str, float]


@dataclass
class CoherenceReport:
    pairs: list[PairCoherence]
    left_mean: float
    right_mean: float
    band_means: dict[str, dict[str, float]]   # hemisphere -> band -> mean P
    freqs: np.ndarray


def welch_spectra(u, v, fs: float, seg_s: float = DEFAULT_SEGMENT_S,
                  overlap: float = DEFAULT_OVERLAP) -> SpectralEstimate:
    """Hann-windowed overlapped-segment estimate of psd_u, psd_v and the
    cross spectrum, one-sided, density scaling. Segment means are removed."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape or u.ndim != 1:
        raise ValueError(f"need equal-length 1-D series, got {u.shape} and {v.shape}")
    if not 0 <= overlap < 1:
        raise ValueError(f"overlap must be in [0, 1), got {overlap}")
    nper = int(round(seg_s * fs))
    if nper < 2:
        raise ValueError(f"segment of {seg_s} s is shorter than 2 samples at fs={fs}")
    step = max(1, int(round(nper * (1.0 - overlap))))
    nseg = (u.size - nper) // step + 1 if u.size >= nper else 0
    if nseg < 2:
        raise ValueError(f"only {nseg} segment(s) of {nper} samples fit a series of "
                         f"{u.size}; need at least 2 (a single segment makes the "
                         "coherence ratio identically 1)")
    window = 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(nper) / nper)
    scale = 1.0 / (fs * np.dot(window, window))
    freqs = np.fft.rfftfreq(nper, 1.0 / fs)
    psd_u = np.zeros(freqs.size)
    psd_v = np.zeros(freqs.size)
    cross = np.zeros(freqs.size, dtype=complex)
    for k in range(nseg):
        su = u[k * step: k * step + nper]
        sv = v[k * step: k * step + nper]
        fu = np.fft.rfft((su - su.mean()) * window)
        fv = np.fft.rfft((sv - sv.mean()) * window)
        psd_u += fu.real ** 2 + fu.imag ** 2
        psd_v += fv.real ** 2 + fv.imag ** 2
        cross += fu * np.conj(fv)
    # One-sided doubling (interior bins carry both halves of the spectrum).
    double = np.full(freqs.size, 2.0)
    double[0] = 1.0
    if nper % 2 == 0:
        double[-1] = 1.0
    psd_u *= scale * double / nseg
    psd_v *= scale * double / nseg
    cross *= scale * double / nseg
    return SpectralEstimate(freqs=freqs, psd_u=psd_u, psd_v=psd_v,
                            cross=cross, segments=nseg)


def msc(est: SpectralEstimate) -> tuple[np.ndarray, np.ndarray]:
    """Magnitude-squared coherence per bin, clamped to [0, 1].

    Returns (c2, valid) where `valid` masks out zero-power bins. Raises if
    every bin has zero power, or if clamping would exceed floating tolerance.
    """
    if est.segments < 2:
        raise ValueError("coherence needs at least 2 averaged segments")
    valid = (est.psd_u > 0.0) & (est.psd_v > 0.0)
    if not valid.any():
        raise ValueError("all frequency bins have zero power")
    c2 = np.zeros(est.freqs.size)
    num = est.cross.real ** 2 + est.cross.imag ** 2
    c2[valid] = num[valid] / (est.psd_u[valid] * est.psd_v[valid])
    over = c2.max(initial=0.0) - 1.0
    if over > CLAMP_TOL:
        raise AssertionError(f"coherence exceeds 1 by {over:.3e}; estimator bug")
    np.clip(c2, 0.0, 1.0, out=c2)
    return c2, valid


def integrated_coherence(c2, freqs, valid=None) -> float:
    """Frequency-averaged coherence: trapezoidal integral over valid bins
    divided by the spanned bandwidth. Result lies in [0, 1]."""
    c2 = np.asarray(c2, dtype=np.float64)
    freqs = np.asarray(freqs, dtype=np.float64)
    if valid is None:
        valid = np.ones(c2.shape, dtype=bool)
    if not valid.any():
        raise ValueError("no valid frequency bins")
    area = 0.0
    extent = 0.0
    # Integrate each contiguous run of valid bins separately.
    idx = np.nonzero(valid)[0]
    run_start = idx[0]
    prev = idx[0]
    runs = []
    for i in idx[1:]:
        if i != prev + 1:
            runs.append((run_start, prev))
            run_start = i
        prev = i
    runs.append((run_start, prev))
    for lo, hi in runs:
        if hi > lo:
            area += float(np.trapezoid(c2[lo:hi + 1], freqs[lo:hi + 1]))
            extent += float(freqs[hi] - freqs[lo])
    if extent == 0.0:
        # Only isolated bins: fall back to their plain mean.
        return float(np.clip(c2[valid].mean(), 0.0, 1.0))
    return float(np.clip(area / extent, 0.0, 1.0))


def band_coherence(c2, freqs, bands: tuple[BandSpec, ...] = DEFAULT_BANDS,
                   valid=None) -> dict[str, float]:
    """Integrated coherence restricted to each band's [lo, hi] range."""
    freqs = np.asarray(freqs, dtype=np.float64)
    if valid is None:
        valid = np.ones(freqs.shape, dtype=bool)
    out = {}
    for band in bands:
        in_band = (freqs >= band.lo) & (freqs <= band.hi)
        if not in_band.any():
            raise ValueError(f"band {band.name} [{band.lo}, {band.hi}] Hz has no "
                             f"bins in grid [{freqs[0]}, {freqs[-1]}] Hz")
        out[band.name] = integrated_coherence(c2, freqs, valid & in_band)
    return out


def _pairs(names: tuple[str, ...]) -> list[tuple[str, str]]:
    return list(itertools.combinations(names, 2))


def coherence_report(rec: Recording, left: tuple[str, ...] = LEFT_ELECTRODES,
                     right: tuple[str, ...] = RIGHT_ELECTRODES,
                     bands: tuple[BandSpec, ...] = DEFAULT_BANDS,
                     seg_s: float = DEFAULT_SEGMENT_S,
                     overlap: float = DEFAULT_OVERLAP) -> CoherenceReport:
    """All intra-hemisphere pairwise coherences plus hemispheric means."""
    for name in (*left, *right):
        if name not in rec.labels:
            raise KeyError(f"electrode {name!r} not in recording "
                           f"(has {list(rec.labels)})")
    pairs: list[PairCoherence] = []
    side_p: dict[str, list[float]] = {"left": [], "right": []}
    side_band: dict[str, dict[str, list[float]]] = {
        "left": {b.name: [] for b in bands},
        "right": {b.name: [] for b in bands},
    }
    freqs = None
    for side, names in (("left", left), ("right", right)):
        for ei, ej in _pairs(tuple(names)):
            est = welch_spectra(rec.channel(ei), rec.channel(ej), rec.fs,
                                seg_s=seg_s, overlap=overlap)
            c2, valid = msc(est)
            p = integrated_coherence(c2, est.freqs, valid)
            bp = band_coherence(c2, est.freqs, bands, valid)
            pairs.append(PairCoherence(ei, ej, c2, p, bp))
            side_p[side].append(p)
            for name, value in bp.items():
                side_band[side][name].append(value)
            freqs = est.freqs
    return CoherenceReport(
        pairs=pairs,
        left_mean=float(np.mean(side_p["left"])),
        right_mean=float(np.mean(side_p["right"])),
        band_means={side: {b: float(np.mean(vals)) for b, vals in per.items()}
                    for side, per in side_band.items()},
        freqs=freqs,
    )


def hemispheric_scores(rec: Recording, left: tuple[str, ...] = LEFT_ELECTRODES,
                       right: tuple[str, ...] = RIGHT_ELECTRODES,
                       seg_s: float = DEFAULT_SEGMENT_S,
                       overlap: float = DEFAULT_OVERLAP) -> tuple[float, float]:
    """Mean integrated coherence over all intra-hemisphere pairs, per side."""
    report = coherence_report(rec, left, right, seg_s=seg_s, overlap=overlap)
    return report.left_mean, report.right_mean


def save_csv(report: CoherenceReport, path) -> None:
    """One row per pair with the averaged and per-band coherence, then one
    summary row per hemisphere."""
    band_names = list(next(iter(report.pairs)).band_p) if report.pairs else []
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("electrode_i,electrode_j,p" +
                 "".join(f",p_{b}" for b in band_names) + "\n")
        for pc in report.pairs:
            fh.write(f"{pc.electrode_i},{pc.electrode_j},{pc.p!r}" +
                     "".join(f",{pc.band_p[b]!r}" for b in band_names) + "\n")
        for side, mean in (("left", report.left_mean), ("right", report.right_mean)):
            fh.write(f"{side}_hemisphere,,{mean!r}" +
                     "".join(f",{report.band_means[side][b]!r}" for b in band_names) + "\n")
