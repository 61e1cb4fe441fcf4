"""Per-channel statistics, amplitude-histogram entropy, FFT band features,
and feature-table assembly.

Entropy uses an equal-width amplitude histogram (default 64 cells over
[min, max]); probabilities are cell occupancies, zero cells contribute
nothing, so the result lies in [0, log2(bins)] bits. Standard deviations are
population (divide by n). FFT features are mean one-sided magnitudes per
band, which keeps the feature count independent of the sampling rate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .filters import DEFAULT_BANDS, BandSpec
from .recording import Recording

DEFAULT_ENTROPY_BINS = 64


@dataclass
class FeatureTable:
    """Samples x named features, with optional per-row class label, score,
    and subject id."""
    feature_names: tuple[str, ...]
    rows: np.ndarray
    labels: tuple[str, ...] | None = None        # "ASD" | "TD" per row
    scores: tuple[int, ...] | None = None        # ADOS-2 per row
    subject_ids: tuple[str, ...] | None = None
    norm_means: np.ndarray | None = None
    norm_stds: np.ndarray | None = None

    def __post_init__(self):
        self.rows = np.asarray(self.rows, dtype=np.float64)
        if self.rows.ndim != 2:
            raise ValueError(f"rows must be 2-D, got shape {self.rows.shape}")
        if len(self.feature_names) != self.rows.shape[1]:
            raise ValueError(f"{len(self.feature_names)} names for "
                             f"{self.rows.shape[1]} columns")
        for attr in ("labels", "scores", "subject_ids"):
            val = getattr(self, attr)
            if val is not None and len(val) != self.rows.shape[0]:
                raise ValueError(f"{attr} has {len(val)} entries for "
                                 f"{self.rows.shape[0]} rows")

    @property
    def n_samples(self) -> int:
        return self.rows.shape[0]

    def column(self, name: str) -> np.ndarray:
        try:
            return self.rows[:, self.feature_names.index(name)]
        except ValueError:
            raise KeyError(f"unknown feature {name!r}") from None


def channel_means(rec: Recording) -> np.ndarray:
    """Arithmetic mean per channel, ordered like rec.labels."""
    if rec.n_channels == 0:
        raise ValueError("recording has no channels")
    return rec.data.mean(axis=1)


def channel_stds(rec: Recording) -> np.ndarray:
    """Population standard deviation per channel."""
    if rec.n_samples < 2:
        raise ValueError("need at least 2 samples for a standard deviation")
    return rec.data.std(axis=1)


def shannon_entropy(x, bins: int = DEFAULT_ENTROPY_BINS) -> float:
    """Entropy in bits of the amplitude histogram of a series."""
    if bins < 2:
        raise ValueError(f"need at least 2 bins, got {bins}")
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.size == 0:
        raise ValueError("empty series")
    if not np.isfinite(x).all():
        raise ValueError("series contains non-finite values")
    lo, hi = float(x.min()), float(x.max())
    if lo == hi:
        return 0.0
    counts, _ = np.histogram(x, bins=bins, range=(lo, hi))
    p = counts[counts > 0] / x.size
    return float(-(p * np.log2(p)).sum())


def magnitude_spectrum(x, fs: float) -> tuple[np.ndarray, np.ndarray]:
    """One-sided DFT magnitudes and their frequency grid."""
    x = np.asarray(x, dtype=np.float64)
    mags = np.abs(np.fft.rfft(x))
    return np.fft.rfftfreq(x.size, 1.0 / fs), mags


def fft_band_features(x, fs: float,
                      bands: tuple[BandSpec, ...] = DEFAULT_BANDS) -> dict[str, float]:
    """Mean spectral magnitude per band over bins in [lo, hi)."""
    x = np.asarray(x, dtype=np.float64)
    if x.size < fs:
        raise ValueError(f"series of {x.size} samples is shorter than 1 s at fs={fs}")
    freqs, mags = magnitude_spectrum(x, fs)
    out = {}
    for band in bands:
        if band.lo >= freqs[-1]:
            raise ValueError(f"band {band.name} starts at {band.lo} Hz, beyond "
                             f"Nyquist {freqs[-1]} Hz")
        mask = (freqs >= band.lo) & (freqs < band.hi)
        out[band.name] = float(mags[mask].mean()) if mask.any() else 0.0
    return out


def assemble(sources: dict[str, dict[str, np.ndarray]],
             subject_ids: tuple[str, ...],
             labels: dict[str, str] | None = None,
             scores: dict[str, int] | None = None,
             feature_names: dict[str, tuple[str, ...]] | None = None,
             normalize: bool = False) -> FeatureTable:
    """Concatenate named per-subject feature vectors into one table.

    `sources` maps source name -> subject id -> vector; the column order is
    source order then vector order, named "<source>_<i>" unless
    `feature_names` provides labels for a source. With `normalize`, columns
    are z-scored and the means/stds retained for test-time reuse (constant
    columns are left unscaled).
    """
    if not sources:
        raise ValueError("no feature sources")
    names: list[str] = []
    blocks: list[np.ndarray] = []
    widths: dict[str, int] = {}
    for source, per_subject in sources.items():
        rows = []
        for sid in subject_ids:
            if sid not in per_subject:
                raise ValueError(f"subject {sid!r} has no {source!r} features")
            vec = np.asarray(per_subject[sid], dtype=np.float64).ravel()
            if source in widths and vec.size != widths[source]:
                raise ValueError(f"{source!r} vector for {sid!r} has {vec.size} "
                                 f"entries, expected {widths[source]}")
            widths[source] = vec.size
            rows.append(vec)
        blocks.append(np.vstack(rows))
        if feature_names and source in feature_names:
            fn = feature_names[source]
            if len(fn) != widths[source]:
                raise ValueError(f"{len(fn)} names for {widths[source]} "
                                 f"{source!r} features")
            names.extend(fn)
        else:
            names.extend(f"{source}_{i}" for i in range(widths[source]))
    rows = np.hstack(blocks)
    norm_means = norm_stds = None
    if normalize:
        norm_means = rows.mean(axis=0)
        norm_stds = rows.std(axis=0)
        safe = np.where(norm_stds > 0, norm_stds, 1.0)
        rows = (rows - norm_means) / safe
    return FeatureTable(
        feature_names=tuple(names), rows=rows,
        labels=tuple(labels[s] for s in subject_ids) if labels else None,
        scores=tuple(scores[s] for s in subject_ids) if scores else None,
        subject_ids=tuple(subject_ids),
        norm_means=norm_means, norm_stds=norm_stds,
    )


def save_csv(table: FeatureTable, path) -> None:
    """Header: subject_id, label, ados2, then feature names."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("subject_id,label,ados2," + ",".join(table.feature_names) + "\n")
        for i in range(table.n_samples):
            sid = table.subject_ids[i] if table.subject_ids else str(i)
            label = table.labels[i] if table.labels else ""
            score = str(table.scores[i]) if table.scores else ""
            fh.write(f"{sid},{label},{score}," +
                     ",".join(repr(float(v)) for v in table.rows[i]) + "\n")


def load_csv(path) -> FeatureTable:
    """Inverse of save_csv."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split(",")
        if header[:3] != ["subject_id", "label", "ados2"]:
            raise ValueError(f"{path}: unexpected header {header[:3]}")
        names = tuple(header[3:])
        sids, labels, scores, rows = [], [], [], []
        for line in fh:
            parts = line.rstrip("\n").split(",")
            sids.append(parts[0])
            labels.append(parts[1])
            scores.append(parts[2])
            rows.append([float(v) for v in parts[3:]])
    have_labels = any(labels)
    have_scores = any(scores)
    return FeatureTable(
        feature_names=names, rows=np.asarray(rows),
        labels=tuple(labels) if have_labels else None,
        scores=tuple(int(s) for s in scores) if have_scores else None,
        subject_ids=tuple(sids),
    )
