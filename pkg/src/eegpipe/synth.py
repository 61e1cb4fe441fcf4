"""Synthetic EEG cohorts with controllable per-band power and inter-channel
coherence.

Channels are built as lambda * shared + (1 - lambda) * noise, renormalized so
band powers stay at their targets; the coherence between two channels of the
same hemisphere is then lambda^4 / (lambda^2 + (1-lambda)^2)^2, monotone in
lambda. Each subject's synthetic ADOS-2 score is 24 - 20 * lambda_right plus
Gaussian noise (sigma 1.5), rounded and clipped to [0, 22], so the score
anti-correlates with right-hemisphere coherence by construction. Everything
is deterministic given the cohort seed.
"""

from __future__ import annotations

import hashlib
import os
import re
from dataclasses import dataclass, field

import numpy as np

from .filters import DEFAULT_BANDS, BandSpec, band_filter, apply_zero_phase
from .recording import HOMAN_ELECTRODES, Epoch, Recording, save_recording

# Synthetic score model: score = round(A - B * lambda_right + N(0, SIGMA)).
SCORE_A = 24.0
SCORE_B = 20.0
SCORE_SIGMA = 1.5
SCORE_RANGE = (0, 22)

# Base windowed power per band (units: in-window sum of squares divided by
# the window length in seconds, matching the bandpower module).
DEFAULT_BAND_POWERS = {"delta": 40.0, "theta": 30.0, "alpha": 25.0,
                       "beta": 15.0, "gamma": 10.0}

LAMBDA_JITTER = 0.05


@dataclass(frozen=True)
class GroupEffect:
    """Per-group generative knobs: band-power multipliers and the shared-source
    mixing weight per hemisphere."""
    band_scale: dict[str, float] = field(default_factory=dict)
    lambda_left: float = 0.65
    lambda_right: float = 0.9

    def __post_init__(self):
        for name, mult in self.band_scale.items():
            if mult <= 0:
                raise ValueError(f"band multiplier for {name} must be > 0, got {mult}")
        for lam in (self.lambda_left, self.lambda_right):
            if not 0.0 <= lam <= 1.0:
                raise ValueError(f"lambda must be in [0, 1], got {lam}")


DEFAULT_TD_EFFECT = GroupEffect(band_scale={}, lambda_left=0.65, lambda_right=0.9)
DEFAULT_ASD_EFFECT = GroupEffect(band_scale={"theta": 1.5},
                                 lambda_left=0.65, lambda_right=0.45)


@dataclass(frozen=True)
class CohortSpec:
    n_asd: int = 8
    n_td: int = 9
    fs: float = 250.0
    duration_s: float = 180.0
    baseline_s: float = 90.0
    channels: tuple[str, ...] = HOMAN_ELECTRODES
    asd: GroupEffect = DEFAULT_ASD_EFFECT
    td: GroupEffect = DEFAULT_TD_EFFECT
    band_powers: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_BAND_POWERS))
    bands: tuple[BandSpec, ...] = DEFAULT_BANDS
    seed: int = 0

    def __post_init__(self):
        if self.n_asd < 0 or self.n_td < 0:
            raise ValueError("subject counts must be >= 0")
        if self.n_asd + self.n_td == 0:
            raise ValueError("cohort has zero subjects")


def _rng_band_signal(band_powers: dict[str, float], fs: float, n: int,
                     rng: np.random.Generator,
                     bands: tuple[BandSpec, ...] = DEFAULT_BANDS) -> np.ndarray:
    out = np.zeros(n)
    for band in bands:
        power = float(band_powers.get(band.name, 0.0))
        if power < 0:
            raise ValueError(f"negative power for band {band.name}")
        if power == 0.0:
            continue
        shaped = apply_zero_phase(band_filter(band, fs), rng.standard_normal(n))
        rms = np.sqrt(np.mean(shaped ** 2))
        # Windowed power averages fs * mean-square, so aim mean-square at P/fs.
        out += shaped * (np.sqrt(power / fs) / rms)
    return out


def gen_band_signal(band_powers: dict[str, float], fs: float, duration_s: float,
                    seed: int, bands: tuple[BandSpec, ...] = DEFAULT_BANDS) -> np.ndarray:
    """Band-limited Gaussian noise whose windowed power per band lands on the
    requested targets. Deterministic per seed."""
    if duration_s < 1.0:
        raise ValueError(f"duration must be >= 1 s, got {duration_s}")
    n = int(round(duration_s * fs))
    return _rng_band_signal(band_powers, fs, n, np.random.default_rng(seed), bands)


def gen_coherent_pair(lam: float, fs: float, duration_s: float,
                      seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Two series whose broadband coherence rises monotonically with `lam`:
    u = s + 0.1 * n1 and v = lam * s + (1 - lam) * n2 for a shared source s."""
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must be in [0, 1], got {lam}")
    rng = np.random.default_rng(seed)
    n = int(round(duration_s * fs))
    shared = rng.standard_normal(n)
    u = shared + 0.1 * rng.standard_normal(n)
    v = lam * shared + (1.0 - lam) * rng.standard_normal(n)
    return u, v


_TRAILING_DIGITS = re.compile(r"(\d+)$")


def hemisphere_of(label: str) -> str:
    """left / right / midline by 10/20 numbering (odd left, even right)."""
    m = _TRAILING_DIGITS.search(label)
    if not m:
        return "midline"
    return "left" if int(m.group(1)) % 2 else "right"


def _scaled_powers(base: dict[str, float], effect: GroupEffect) -> dict[str, float]:
    return {name: power * effect.band_scale.get(name, 1.0)
            for name, power in base.items()}


def _mix(shared: np.ndarray, noise: np.ndarray, lam: float) -> np.ndarray:
    norm = np.sqrt(lam * lam + (1.0 - lam) * (1.0 - lam))
    return (lam * shared + (1.0 - lam) * noise) / norm


def _gen_subject(spec: CohortSpec, group: str, index: int) -> Recording:
    rng = np.random.default_rng([spec.seed, index])
    effect = spec.asd if group == "ASD" else spec.td
    powers = _scaled_powers(spec.band_powers, effect)
    n = int(round((spec.baseline_s + spec.duration_s) * spec.fs))
    lam = {
        "left": float(np.clip(effect.lambda_left
                              + rng.uniform(-LAMBDA_JITTER, LAMBDA_JITTER), 0.0, 1.0)),
        "right": float(np.clip(effect.lambda_right
                               + rng.uniform(-LAMBDA_JITTER, LAMBDA_JITTER), 0.0, 1.0)),
    }
    lam["midline"] = 0.5 * (lam["left"] + lam["right"])
    shared = {
        "left": _rng_band_signal(powers, spec.fs, n, rng, spec.bands),
        "right": _rng_band_signal(powers, spec.fs, n, rng, spec.bands),
    }
    shared["midline"] = (shared["left"] + shared["right"]) / np.sqrt(2.0)
    data = np.empty((len(spec.channels), n))
    for c, label in enumerate(spec.channels):
        side = hemisphere_of(label)
        noise = _rng_band_signal(powers, spec.fs, n, rng, spec.bands)
        data[c] = _mix(shared[side], noise, lam[side])
    score = int(np.clip(round(SCORE_A - SCORE_B * lam["right"]
                              + rng.normal(0.0, SCORE_SIGMA)), *SCORE_RANGE))
    nb = int(round(spec.baseline_s * spec.fs))
    epochs = []
    if nb > 0:
        epochs.append(Epoch("BASELINE", 0, nb))
    epochs.append(Epoch("TASK1", nb, n))
    return Recording(
        data=data, fs=spec.fs, labels=tuple(spec.channels), epochs=tuple(epochs),
        diagnosis=group, ados2_score=score,
        subject_id=f"{group.lower()}{index + 1:02d}",
    )


def gen_cohort(spec: CohortSpec) -> list[Recording]:
    """All ASD subjects then all TD subjects, deterministically from the seed."""
    recs = [_gen_subject(spec, "ASD", i) for i in range(spec.n_asd)]
    recs += [_gen_subject(spec, "TD", spec.n_asd + i) for i in range(spec.n_td)]
    return recs


def write_cohort(recs: list[Recording], out_dir) -> list[str]:
    """Save every recording as a manifest + CSV pair; returns manifest paths."""
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for rec in recs:
        path = os.path.join(out_dir, f"{rec.subject_id}.json")
        save_recording(rec, path)
        paths.append(path)
    return paths


def cohort_digest(recs: list[Recording]) -> str:
    """Stable content hash of the cohort (data plus per-subject metadata)."""
    h = hashlib.sha256()
    for rec in recs:
        h.update(rec.subject_id.encode())
        h.update(str(rec.diagnosis).encode())
        h.update(str(rec.ados2_score).encode())
        h.update(np.ascontiguousarray(rec.data).tobytes())
    return h.hexdigest()
