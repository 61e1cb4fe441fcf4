"""Multichannel recording data model and manifest/CSV ingestion.

A recording on disk is two files: a JSON manifest (sampling rate, ordered
channel labels, epoch table, optional diagnosis and ADOS-2 score, and the
name of the data file) plus a dumb CSV with one header row of labels and one
row per sample, values in microvolts. Sample indices are 0-based; epoch ends
are exclusive.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field, replace

import numpy as np

# Social-brain electrode subset (10/20 names), split by hemisphere.
LEFT_ELECTRODES = ("F7", "T7", "TP9", "P7", "C3")
RIGHT_ELECTRODES = ("F8", "T8", "TP10", "P8", "C4")
HOMAN_ELECTRODES = ("F7", "F8", "T7", "T8", "TP9", "TP10", "P7", "P8", "C3", "C4")

# 32-channel actiCAP-style montage; includes every HOMAN electrode.
STANDARD_32 = (
    "Fp1", "Fp2", "F7", "F3", "Fz", "F4", "F8", "FC5", "FC1", "FC2", "FC6",
    "T7", "C3", "Cz", "C4", "T8", "TP9", "CP5", "CP1", "CP2", "CP6", "TP10",
    "P7", "P3", "Pz", "P4", "P8", "PO9", "O1", "Oz", "O2", "PO10",
)

BASELINE_EPOCH = "BASELINE"
MIDDLE_THIRD_S = 180.0


@dataclass(frozen=True)
class Epoch:
    name: str
    start: int
    end: int  # exclusive

    def __post_init__(self):
        if not 0 <= self.start < self.end:
            raise ValueError(f"epoch {self.name}: need 0 <= start < end, "
                             f"got [{self.start}, {self.end})")

    @property
    def length(self) -> int:
        return self.end - self.start


@dataclass(frozen=True)
class ElectrodeSet:
    names: tuple[str, ...]

    def __post_init__(self):
        if not self.names:
            raise ValueError("electrode set is empty")
        if len(set(self.names)) != len(self.names):
            raise ValueError(f"duplicate electrode names in {self.names}")


HOMAN_SET = ElectrodeSet(HOMAN_ELECTRODES)


@dataclass(frozen=True)
class Recording:
    """Channels x samples signal matrix with metadata; immutable."""
    data: np.ndarray
    fs: float
    labels: tuple[str, ...]
    epochs: tuple[Epoch, ...] = ()
    diagnosis: str | None = None        # "ASD" | "TD"
    ados2_score: int | None = None
    subject_id: str = ""

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 2:
            raise ValueError(f"data must be channels x samples, got shape {data.shape}")
        view = data.view()
        view.setflags(write=False)
        object.__setattr__(self, "data", view)
        if self.fs <= 0:
            raise ValueError(f"sampling rate must be positive, got {self.fs}")
        if len(self.labels) != data.shape[0]:
            raise ValueError(f"{len(self.labels)} labels for {data.shape[0]} channels")
        if len(set(self.labels)) != len(self.labels):
            raise ValueError(f"duplicate channel labels: {self.labels}")
        names = [e.name for e in self.epochs]
        if names.count(BASELINE_EPOCH) > 1:
            raise ValueError("more than one BASELINE epoch")
        for e in self.epochs:
            if e.end > data.shape[1]:
                raise ValueError(f"epoch {e.name} [{e.start}, {e.end}) exceeds "
                                 f"{data.shape[1]} samples")
        if self.diagnosis is not None and self.diagnosis not in ("ASD", "TD"):
            raise ValueError(f"diagnosis must be ASD or TD, got {self.diagnosis!r}")
        if self.ados2_score is not None and self.ados2_score < 0:
            raise ValueError(f"ados2_score must be >= 0, got {self.ados2_score}")

    @property
    def n_channels(self) -> int:
        return self.data.shape[0]

    @property
    def n_samples(self) -> int:
        return self.data.shape[1]

    @property
    def duration_s(self) -> float:
        return self.n_samples / self.fs

    def epoch(self, name: str) -> Epoch:
        for e in self.epochs:
            if e.name == name:
                return e
        raise KeyError(f"unknown epoch {name!r}; have {[e.name for e in self.epochs]}")

    def channel(self, label: str) -> np.ndarray:
        try:
            return self.data[self.labels.index(label)]
        except ValueError:
            raise KeyError(f"unknown electrode {label!r}") from None


@dataclass(frozen=True)
class Finding:
    kind: str               # nan | inf | flat_channel | duplicate_label
    channel: str | None
    sample: int | None
    message: str


@dataclass
class ValidationReport:
    findings: list[Finding] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.findings


def load_recording(manifest_path, permissive: bool = False) -> Recording:
    """Load a manifest + CSV pair.

    Raises with file/row/column context on missing files, label mismatches,
    non-numeric cells, or out-of-range epochs. Non-finite values are rejected
    unless `permissive` is set (validate() will still flag them).
    """
    manifest_path = str(manifest_path)
    try:
        with open(manifest_path, "r", encoding="utf-8") as fh:
            manifest = json.load(fh)
    except FileNotFoundError:
        raise FileNotFoundError(f"manifest not found: {manifest_path}") from None
    except json.JSONDecodeError as exc:
        raise ValueError(f"{manifest_path}: not valid JSON ({exc})") from None

    for key in ("fs_hz", "channels", "data"):
        if key not in manifest:
            raise ValueError(f"{manifest_path}: missing required field {key!r}")
    fs = float(manifest["fs_hz"])
    channels = [str(c) for c in manifest["channels"]]

    csv_path = os.path.join(os.path.dirname(manifest_path), manifest["data"])
    try:
        fh = open(csv_path, "r", encoding="utf-8", newline="")
    except FileNotFoundError:
        raise FileNotFoundError(f"data file not found: {csv_path} "
                                f"(referenced by {manifest_path})") from None
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{csv_path}: empty file") from None
        header = [h.strip() for h in header]
        missing = [c for c in channels if c not in header]
        if missing:
            raise ValueError(f"{csv_path}: manifest channel(s) {missing} absent "
                             f"from CSV header {header}")
        if len(header) != len(channels):
            raise ValueError(f"{csv_path}: header has {len(header)} columns, "
                             f"manifest declares {len(channels)} channels")
        rows = list(reader)

    for i, row in enumerate(rows):
        if len(row) != len(header):
            raise ValueError(f"{csv_path}: row {i + 2} has {len(row)} cells, "
                             f"expected {len(header)}")
    try:
        data = np.asarray(rows, dtype=np.float64) if rows else np.empty((0, len(header)))
    except ValueError:
        for i, row in enumerate(rows):
            for j, cell in enumerate(row):
                try:
                    float(cell)
                except ValueError:
                    raise ValueError(f"{csv_path}: non-numeric cell {cell!r} at "
                                     f"row {i + 2}, column {j + 1} ({header[j]})") from None
        raise
    data = data.T  # channel-major
    # Reorder rows to the manifest's channel order.
    order = [header.index(c) for c in channels]
    data = np.ascontiguousarray(data[order])

    if not permissive and data.size and not np.isfinite(data).all():
        ch, smp = np.argwhere(~np.isfinite(data))[0]
        raise ValueError(f"{csv_path}: non-finite value at channel {channels[ch]!r}, "
                         f"sample {smp} (pass permissive=True to admit)")

    n_samples = data.shape[1]
    epochs = []
    for entry in manifest.get("epochs", []):
        e = Epoch(str(entry["name"]), int(entry["start_sample"]), int(entry["end_sample"]))
        if e.end > n_samples:
            raise ValueError(f"{manifest_path}: epoch {e.name} ends at {e.end} but "
                             f"{csv_path} has only {n_samples} samples")
        epochs.append(e)

    score = manifest.get("ados2_score")
    return Recording(
        data=data, fs=fs, labels=tuple(channels), epochs=tuple(epochs),
        diagnosis=manifest.get("diagnosis"),
        ados2_score=None if score is None else int(score),
        subject_id=str(manifest.get("subject_id", "")),
    )


def save_recording(rec: Recording, manifest_path, data_filename: str | None = None) -> None:
    """Write the manifest + CSV pair; floats are repr-formatted so a reload
    reproduces the data bit-exactly."""
    manifest_path = str(manifest_path)
    if data_filename is None:
        base = os.path.basename(manifest_path)
        data_filename = (base[:-5] if base.endswith(".json") else base) + ".csv"
    manifest = {
        "fs_hz": rec.fs,
        "channels": list(rec.labels),
        "data": data_filename,
        "epochs": [{"name": e.name, "start_sample": e.start, "end_sample": e.end}
                   for e in rec.epochs],
    }
    if rec.diagnosis is not None:
        manifest["diagnosis"] = rec.diagnosis
    if rec.ados2_score is not None:
        manifest["ados2_score"] = rec.ados2_score
    if rec.subject_id:
        manifest["subject_id"] = rec.subject_id
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    csv_path = os.path.join(os.path.dirname(manifest_path), data_filename)
    cols = rec.data.T
    with open(csv_path, "w", encoding="utf-8") as fh:
        fh.write(",".join(rec.labels) + "\n")
        for row in cols:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def extract_epoch(rec: Recording, name: str, middle_third: bool = False) -> Recording:
    """Slice out one epoch.

    With `middle_third`, takes a 180 s slice starting a third of the way into
    the epoch (requires the epoch to be at least 270 s); otherwise the literal
    [start, end) range.
    """
    e = rec.epoch(name)
    if middle_third:
        sub = int(round(MIDDLE_THIRD_S * rec.fs))
        offset = e.length // 3
        if offset + sub > e.length:
            raise ValueError(f"epoch {name} has {e.length} samples; middle-third "
                             f"{MIDDLE_THIRD_S:.0f} s extraction needs >= {3 * sub}")
        start, end = e.start + offset, e.start + offset + sub
    else:
        start, end = e.start, e.end
    data = np.ascontiguousarray(rec.data[:, start:end])
    return replace(rec, data=data, epochs=(Epoch(name, 0, end - start),))


def select_channels(rec: Recording, electrodes: ElectrodeSet | tuple[str, ...]) -> Recording:
    """Keep only the named channels, reordered to the requested order."""
    names = electrodes.names if isinstance(electrodes, ElectrodeSet) else tuple(electrodes)
    missing = [n for n in names if n not in rec.labels]
    if missing:
        raise KeyError(f"unknown electrode(s) {missing}; recording has {list(rec.labels)}")
    idx = [rec.labels.index(n) for n in names]
    return replace(rec, data=np.ascontiguousarray(rec.data[idx]), labels=tuple(names))


def validate(rec: Recording, flat_window_s: float = 5.0) -> ValidationReport:
    """Report non-finite cells, flat channels, and duplicate labels; never mutates."""
    report = ValidationReport()
    seen: set[str] = set()
    for label in rec.labels:
        if label in seen:
            report.findings.append(Finding("duplicate_label", label, None,
                                           f"label {label} appears more than once"))
        seen.add(label)
    bad = ~np.isfinite(rec.data)
    for ch, smp in np.argwhere(bad):
        value = rec.data[ch, smp]
        kind = "nan" if math.isnan(value) else "inf"
        report.findings.append(Finding(kind, rec.labels[ch], int(smp),
                                       f"{kind} at channel {rec.labels[ch]}, sample {smp}"))
    win = int(round(flat_window_s * rec.fs))
    if win >= 2 and rec.n_samples >= win:
        for ch, label in enumerate(rec.labels):
            x = rec.data[ch]
            nwin = rec.n_samples // win
            trimmed = x[:nwin * win].reshape(nwin, win)
            flat = np.nonzero(trimmed.var(axis=1) == 0.0)[0]
            if flat.size:
                report.findings.append(Finding(
                    "flat_channel", label, int(flat[0] * win),
                    f"channel {label} is flat for {flat_window_s:.0f} s "
                    f"starting at sample {int(flat[0] * win)}"))
    return report
