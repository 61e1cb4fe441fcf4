"""Command-line pipeline: staged execution, run artifacts, and reports.

One binary with subcommands. `run` executes the configured stages in
dependency order inside a run directory, writing per-stage CSVs, scalogram
images, coherence reports, metrics tables, and a machine-readable
summary.json listing every output with a content digest. All randomness
flows from the single config seed, so identical config + seed reproduces the
summary byte for byte. A failing stage aborts with the stage named; partial
outputs stay behind under a failed/ marker.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import KERNEL_BACKEND, bandpower, coherence, features, mlkit, synth, wavelet
from .filters import DEFAULT_BANDS, BandSpec, remove_drift, remove_line_noise
from .recording import (HOMAN_ELECTRODES, LEFT_ELECTRODES, RIGHT_ELECTRODES,
                        Recording, extract_epoch, load_recording, save_recording,
                        select_channels)

STAGES = ("synth", "preprocess", "bandpower", "wavelet", "coherence",
          "features", "train")

# Stage -> stages that must run (or have run) before it.
DEPENDENCIES: dict[str, tuple[str, ...]] = {
    "synth": (),
    "preprocess": (),            # needs synth or input manifests; checked separately
    "bandpower": ("preprocess",),
    "wavelet": ("preprocess",),
    "coherence": ("preprocess",),
    "features": ("preprocess",),  # plus the stages behind its sources
    "train": ("features",),
}

SOURCE_STAGE = {"bandpower": "bandpower", "coherence": "coherence",
                "stats": "preprocess", "entropy": "preprocess", "fft": "preprocess"}

DEFAULT_CONFIG = {
    "seed": 0,
    "stages": ["synth", "preprocess", "bandpower", "coherence", "features", "train"],
    "epoch": "TASK1",
    "middle_third": False,
    "preprocess": {"drift_hz": 1.0, "line_hz": 60.0, "electrode_set": "homan"},
    "bandpower": {"window_s": 5.0, "step_s": 2.0},
    "wavelet": {"scale_count": 150, "target_cols": 150, "f_c": 1.0, "f_b": 1.5,
                "baseline_epoch": "BASELINE"},
    "coherence": {"seg_s": 2.0, "overlap": 0.5},
    "features": {"sources": ["bandpower", "coherence"], "normalize": False},
    "train": {"models": ["gnb", "logistic", "knn"], "cv": "loocv",
              "regression": True,
              "regression_features": ["coh_right_delta", "coh_right_theta"]},
}


class PipelineError(Exception):
    """Raised with a human-readable, stage-tagged message."""


# ---------------------------------------------------------------------------
# Config handling

def _merged(defaults: dict, override: dict) -> dict:
    out = dict(defaults)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merged(out[key], value)
        else:
            out[key] = value
    return out


def load_config(path: str | None, overrides: dict | None = None) -> dict:
    cfg = json.loads(json.dumps(DEFAULT_CONFIG))  # deep copy
    if path is not None:
        with open(path, "r", encoding="utf-8") as fh:
            try:
                user = json.load(fh)
            except json.JSONDecodeError as exc:
                raise PipelineError(f"config {path}: not valid JSON ({exc})") from None
        cfg = _merged(cfg, user)
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key == "electrode_set":
            cfg.setdefault("preprocess", {})["electrode_set"] = value
        else:
            cfg[key] = value
    return cfg


def config_bands(cfg: dict) -> tuple[BandSpec, ...]:
    if "bands" not in cfg:
        return DEFAULT_BANDS
    return tuple(BandSpec(str(n), float(lo), float(hi)) for n, lo, hi in cfg["bands"])


def validate_config(cfg: dict) -> list[str]:
    """Static checks; returns the stage plan or raises PipelineError."""
    stages = list(cfg.get("stages", []))
    unknown = [s for s in stages if s not in STAGES]
    if unknown:
        raise PipelineError(f"unknown stage(s) {unknown}; valid: {list(STAGES)}")
    plan = [s for s in STAGES if s in stages]  # dependency order
    have = set(plan)
    if "preprocess" in have and "synth" not in have and not cfg.get("inputs"):
        raise PipelineError("preprocess needs either a synth stage or input manifests")
    for stage in plan:
        missing = [d for d in DEPENDENCIES[stage] if d not in have]
        if missing:
            raise PipelineError(f"stage {stage!r} requires {missing} in the plan")
    if "features" in have:
        for source in cfg["features"]["sources"]:
            stage = SOURCE_STAGE.get(source)
            if stage is None:
                raise PipelineError(f"unknown feature source {source!r}; "
                                    f"valid: {sorted(SOURCE_STAGE)}")
            if stage not in have:
                raise PipelineError(f"feature source {source!r} requires the "
                                    f"{stage!r} stage in the plan")
    if "train" in have:
        for model in cfg["train"]["models"]:
            if model not in ("gnb", "logistic", "knn"):
                raise PipelineError(f"unknown model {model!r}")
    if "inputs" in cfg and "synth" in have:
        raise PipelineError("config has both input manifests and a synth stage")
    return plan


def _synth_spec(cfg: dict) -> synth.CohortSpec:
    s = dict(cfg.get("synth", {}))
    bands = config_bands(cfg)

    def effect(key, default):
        e = s.get(key)
        if e is None:
            return default
        return synth.GroupEffect(band_scale=dict(e.get("band_scale", {})),
                                 lambda_left=float(e.get("lambda_left", default.lambda_left)),
                                 lambda_right=float(e.get("lambda_right", default.lambda_right)))

    return synth.CohortSpec(
        n_asd=int(s.get("n_asd", 8)), n_td=int(s.get("n_td", 9)),
        fs=float(s.get("fs", 250.0)),
        duration_s=float(s.get("duration_s", 180.0)),
        baseline_s=float(s.get("baseline_s", 90.0)),
        channels=tuple(s.get("channels", HOMAN_ELECTRODES)),
        asd=effect("asd", synth.DEFAULT_ASD_EFFECT),
        td=effect("td", synth.DEFAULT_TD_EFFECT),
        band_powers=dict(s.get("band_powers", synth.DEFAULT_BAND_POWERS)),
        bands=bands,
        seed=int(s.get("seed", cfg.get("seed", 0))),
    )


# ---------------------------------------------------------------------------
# Run context and helpers

class RunContext:
    def __init__(self, cfg: dict, out_dir: str, jobs: int = 1):
        self.cfg = cfg
        self.out = out_dir
        self.jobs = max(1, jobs)
        self.bands = config_bands(cfg)
        self.recordings: dict[str, Recording] = {}      # raw, with epochs
        self.clean: dict[str, Recording] = {}           # preprocessed full-length
        self.task: dict[str, Recording] = {}            # analysis epoch slice
        self.matrices: dict[str, list[bandpower.PowerMatrix]] = {}
        self.reports: dict[str, coherence.CoherenceReport] = {}
        self.table: features.FeatureTable | None = None
        self.outputs: list[str] = []                    # run-relative paths
        self.metrics_summary: dict = {}

    def subject_order(self) -> list[str]:
        return sorted(self.recordings)

    def path(self, *parts) -> str:
        full = os.path.join(self.out, *parts)
        os.makedirs(os.path.dirname(full), exist_ok=True)
        return full

    def note(self, full_path: str) -> None:
        self.outputs.append(os.path.relpath(full_path, self.out))

    def pmap(self, fn, items):
        if self.jobs == 1:
            return [fn(item) for item in items]
        with ThreadPoolExecutor(max_workers=self.jobs) as pool:
            return list(pool.map(fn, items))


def _write_atomic(path: str, data: bytes) -> None:
    tmp = path + ".tmp"
    with open(tmp, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)


def _sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


# ---------------------------------------------------------------------------
# Stages

def stage_synth(ctx: RunContext) -> None:
    spec = _synth_spec(ctx.cfg)
    recs = synth.gen_cohort(spec)
    cohort_dir = os.path.join(ctx.out, "cohort")
    for path in synth.write_cohort(recs, cohort_dir):
        ctx.note(path)
        ctx.note(path[:-5] + ".csv")
    for rec in recs:
        ctx.recordings[rec.subject_id] = rec


def stage_load_inputs(ctx: RunContext) -> None:
    for i, manifest in enumerate(ctx.cfg["inputs"]):
        rec = load_recording(manifest)
        sid = rec.subject_id or f"subject{i + 1:02d}"
        if sid in ctx.recordings:
            raise PipelineError(f"duplicate subject id {sid!r} in inputs")
        ctx.recordings[sid] = rec


def _electrode_selection(ctx: RunContext, rec: Recording) -> Recording:
    which = ctx.cfg["preprocess"].get("electrode_set", "homan")
    if which == "all":
        return rec
    if which == "homan":
        return select_channels(rec, HOMAN_ELECTRODES)
    raise PipelineError(f"electrode_set must be 'homan' or 'all', got {which!r}")


def stage_preprocess(ctx: RunContext) -> None:
    pcfg = ctx.cfg["preprocess"]
    epoch = ctx.cfg.get("epoch", "TASK1")
    middle = bool(ctx.cfg.get("middle_third", False))

    def clean_one(sid: str) -> tuple[str, Recording, Recording]:
        rec = _electrode_selection(ctx, ctx.recordings[sid])
        rows = [remove_line_noise(
                    remove_drift(ch, rec.fs, cutoff_hz=float(pcfg["drift_hz"])),
                    rec.fs, line_hz=float(pcfg["line_hz"]))
                for ch in rec.data]
        clean = Recording(data=np.vstack(rows), fs=rec.fs, labels=rec.labels,
                          epochs=rec.epochs, diagnosis=rec.diagnosis,
                          ados2_score=rec.ados2_score, subject_id=rec.subject_id or sid)
        return sid, clean, extract_epoch(clean, epoch, middle_third=middle)

    for sid, clean, task in ctx.pmap(clean_one, ctx.subject_order()):
        ctx.clean[sid] = clean
        ctx.task[sid] = task
        path = ctx.path("preprocessed", f"{sid}.json")
        save_recording(clean, path)
        ctx.note(path)
        ctx.note(path[:-5] + ".csv")


def stage_bandpower(ctx: RunContext) -> None:
    bcfg = ctx.cfg["bandpower"]

    def matrices_for(sid: str) -> tuple[str, list[bandpower.PowerMatrix]]:
        rec = ctx.task[sid]
        mats = [bandpower.power_matrix(ctx.bands, rec.data[i],
                                       window_s=float(bcfg["window_s"]),
                                       step_s=float(bcfg["step_s"]),
                                       fs=rec.fs, electrode=label)
                for i, label in enumerate(rec.labels)]
        return sid, mats

    for sid, mats in ctx.pmap(matrices_for, ctx.subject_order()):
        ctx.matrices[sid] = mats
        for mat in mats:
            path = ctx.path("bandpower", f"{sid}_{mat.electrode}.csv")
            bandpower.save_csv(mat, path)
            ctx.note(path)


def stage_wavelet(ctx: RunContext) -> None:
    wcfg = ctx.cfg["wavelet"]
    params = wavelet.MorletParams(f_c=float(wcfg["f_c"]), f_b=float(wcfg["f_b"]))
    count = int(wcfg["scale_count"])
    target = int(wcfg["target_cols"])
    base_epoch = wcfg.get("baseline_epoch", "BASELINE")
    electrodes = wcfg.get("electrodes")

    def transform(sid: str):
        task = ctx.task[sid]
        clean = ctx.clean[sid]
        names = tuple(electrodes) if electrodes else task.labels
        have_baseline = any(e.name == base_epoch for e in clean.epochs)
        baseline_rec = extract_epoch(clean, base_epoch) if have_baseline else None
        out = []
        for label in names:
            scales = wavelet.scale_grid(task.fs, count)
            sg = wavelet.cwt(task.channel(label), task.fs, scales, params, electrode=label)
            sg = wavelet.downsample_max(sg, min(target, sg.n_times))
            if baseline_rec is not None:
                base = wavelet.cwt(baseline_rec.channel(label), task.fs, scales,
                                   params, electrode=label)
                sg = wavelet.baseline_reference(sg, base)
            out.append(sg)
        return sid, out

    for sid, sgs in ctx.pmap(transform, ctx.subject_order()):
        for sg in sgs:
            csv_path = ctx.path("wavelet", f"{sid}_{sg.electrode}.csv")
            wavelet.save_csv(sg, csv_path)
            ctx.note(csv_path)
            img_path = ctx.path("wavelet", f"{sid}_{sg.electrode}.pgm")
            wavelet.export_image(sg, img_path)
            ctx.note(img_path)


def stage_coherence(ctx: RunContext) -> None:
    ccfg = ctx.cfg["coherence"]

    def report_for(sid: str):
        rec = ctx.task[sid]
        return sid, coherence.coherence_report(
            rec, LEFT_ELECTRODES, RIGHT_ELECTRODES, ctx.bands,
            seg_s=float(ccfg["seg_s"]), overlap=float(ccfg["overlap"]))

    for sid, report in ctx.pmap(report_for, ctx.subject_order()):
        ctx.reports[sid] = report
        path = ctx.path("coherence", f"{sid}.csv")
        coherence.save_csv(report, path)
        ctx.note(path)


def _hemisphere_electrodes(labels: tuple[str, ...]) -> dict[str, list[str]]:
    sides: dict[str, list[str]] = {"left": [], "right": []}
    for label in labels:
        side = synth.hemisphere_of(label)
        if side in sides:
            sides[side].append(label)
    return sides


def _feature_source(ctx: RunContext, source: str):
    """Returns (per-subject vectors, feature names) for one source."""
    subjects = ctx.subject_order()
    band_names = [b.name for b in ctx.bands]
    if source == "bandpower":
        names: list[str] = [f"bp_{b}" for b in band_names]
        sides = _hemisphere_electrodes(ctx.task[subjects[0]].labels)
        for side in ("left", "right"):
            if sides[side]:
                names.extend(f"bp_{side}_{b}" for b in band_names)
        vectors = {}
        for sid in subjects:
            mats = {m.electrode: m for m in ctx.matrices[sid]}
            overall = np.mean([m.values.mean(axis=1) for m in mats.values()], axis=0)
            vec = list(overall)
            for side in ("left", "right"):
                if sides[side]:
                    vec.extend(np.mean([mats[e].values.mean(axis=1)
                                        for e in sides[side] if e in mats], axis=0))
            vectors[sid] = np.asarray(vec)
        return vectors, tuple(names)
    if source == "coherence":
        names = ["coh_left_mean", "coh_right_mean"]
        names += [f"coh_left_{b}" for b in band_names]
        names += [f"coh_right_{b}" for b in band_names]
        vectors = {}
        for sid in subjects:
            rep = ctx.reports[sid]
            vec = [rep.left_mean, rep.right_mean]
            vec += [rep.band_means["left"][b] for b in band_names]
            vec += [rep.band_means["right"][b] for b in band_names]
            vectors[sid] = np.asarray(vec)
        return vectors, tuple(names)
    if source == "stats":
        labels = ctx.task[subjects[0]].labels
        names = [f"mean_{e}" for e in labels] + [f"std_{e}" for e in labels]
        vectors = {sid: np.concatenate([features.channel_means(ctx.task[sid]),
                                        features.channel_stds(ctx.task[sid])])
                   for sid in subjects}
        return vectors, tuple(names)
    if source == "entropy":
        labels = ctx.task[subjects[0]].labels
        names = [f"ent_{e}" for e in labels]
        vectors = {sid: np.asarray([features.shannon_entropy(ctx.task[sid].channel(e))
                                    for e in labels])
                   for sid in subjects}
        return vectors, tuple(names)
    if source == "fft":
        names = [f"fft_{b}" for b in band_names]
        vectors = {}
        for sid in subjects:
            rec = ctx.task[sid]
            per_channel = [features.fft_band_features(rec.data[i], rec.fs, ctx.bands)
                           for i in range(rec.n_channels)]
            vectors[sid] = np.asarray([np.mean([pc[b] for pc in per_channel])
                                       for b in band_names])
        return vectors, tuple(names)
    raise PipelineError(f"unknown feature source {source!r}")


def stage_features(ctx: RunContext) -> None:
    fcfg = ctx.cfg["features"]
    subjects = ctx.subject_order()
    sources: dict[str, dict[str, np.ndarray]] = {}
    names: dict[str, tuple[str, ...]] = {}
    for source in fcfg["sources"]:
        vectors, source_names = _feature_source(ctx, source)
        sources[source] = vectors
        names[source] = source_names
    labels = {sid: ctx.recordings[sid].diagnosis for sid in subjects}
    scores = {sid: ctx.recordings[sid].ados2_score for sid in subjects}
    have_labels = all(v is not None for v in labels.values())
    have_scores = all(v is not None for v in scores.values())
    ctx.table = features.assemble(
        sources, tuple(subjects),
        labels=labels if have_labels else None,
        scores=scores if have_scores else None,
        feature_names=names, normalize=bool(fcfg.get("normalize", False)))
    path = ctx.path("features", "features.csv")
    features.save_csv(ctx.table, path)
    ctx.note(path)


def _model_factories(n_samples: int, cv) -> dict:
    if cv == "loocv":
        min_train = n_samples - 1
    else:
        min_train = n_samples - (n_samples + int(cv) - 1) // int(cv)
    return {
        "gnb": mlkit.GaussianNB,
        "logistic": mlkit.LogisticRegression,
        # k=5 unless the smallest training fold is smaller
        "knn": lambda: mlkit.KNearest(k=max(1, min(5, min_train))),
    }


def stage_train(ctx: RunContext) -> None:
    tcfg = ctx.cfg["train"]
    table = ctx.table
    if table is None:
        raise PipelineError("train stage ran before features")
    if table.labels is None:
        raise PipelineError("feature table has no class labels; cannot train")
    X = table.rows
    y = np.asarray(table.labels)
    cv = tcfg.get("cv", "loocv")
    seed = int(ctx.cfg.get("seed", 0))
    factories = _model_factories(len(y), cv)
    named_metrics: list[tuple[str, mlkit.Metrics]] = []
    for name in tcfg["models"]:
        factory = factories[name]
        metrics = mlkit.cross_validate(X, y, factory, folds=cv, seed=seed)
        named_metrics.append((name, metrics))
        model = factory().fit(X, y)
        model_path = ctx.path("train", f"model_{name}.json")
        mlkit.export_model(model, model_path)
        ctx.note(model_path)
    metrics_path = ctx.path("train", "metrics.csv")
    _write_atomic(metrics_path, mlkit.metrics_csv_rows(named_metrics).encode())
    ctx.note(metrics_path)
    ctx.metrics_summary["classification"] = {
        name: {"precision": m.precision, "recall": m.recall,
               "f1": m.f1, "accuracy": m.accuracy}
        for name, m in named_metrics}

    if tcfg.get("regression", False) and table.scores is not None:
        cols = [c for c in tcfg["regression_features"] if c in table.feature_names]
        if cols:
            Xr = np.column_stack([table.column(c) for c in cols])
            yr = np.asarray(table.scores, dtype=np.float64)
            reg_metrics = mlkit.cross_validate(
                Xr, yr, mlkit.LinearRegressionModel, folds="loocv", task="regress")
            model = mlkit.LinearRegressionModel().fit(Xr, yr)
            reg_path = ctx.path("train", "regression.csv")
            text = ("Model,r2,MAE,RMSE\n"
                    f"LinearRegression,{reg_metrics.r2:.4f},{reg_metrics.mae:.4f},"
                    f"{reg_metrics.rmse:.4f}\n")
            _write_atomic(reg_path, text.encode())
            ctx.note(reg_path)
            model_path = ctx.path("train", "model_linreg.json")
            mlkit.export_model(model, model_path)
            ctx.note(model_path)
            ctx.metrics_summary["regression"] = {
                "features": cols, "r2": reg_metrics.r2, "mae": reg_metrics.mae,
                "rmse": reg_metrics.rmse,
                "coefficients": model.weights_.tolist(), "bias": model.bias_}


_STAGE_FUNCS = {
    "synth": stage_synth,
    "preprocess": stage_preprocess,
    "bandpower": stage_bandpower,
    "wavelet": stage_wavelet,
    "coherence": stage_coherence,
    "features": stage_features,
    "train": stage_train,
}


# ---------------------------------------------------------------------------
# Run driver

def run(cfg: dict, out_dir: str, jobs: int = 1, dry_run: bool = False,
        stop_after: str | None = None) -> int:
    cfg = _merged(json.loads(json.dumps(DEFAULT_CONFIG)), cfg)
    try:
        plan = validate_config(cfg)
    except PipelineError as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return 2
    if stop_after is not None and stop_after in plan:
        plan = plan[:plan.index(stop_after) + 1]
    if dry_run:
        print("stage plan:")
        for stage in plan:
            print(f"  {stage}")
        print(f"output directory: {out_dir}")
        return 0
    os.makedirs(out_dir, exist_ok=True)
    ctx = RunContext(cfg, out_dir, jobs=jobs)
    for stage in plan:
        try:
            if stage == "preprocess" and "synth" not in plan:
                stage_load_inputs(ctx)
            _STAGE_FUNCS[stage](ctx)
        except Exception as exc:
            marker_dir = os.path.join(out_dir, "failed")
            os.makedirs(marker_dir, exist_ok=True)
            with open(os.path.join(marker_dir, "stage.txt"), "w", encoding="utf-8") as fh:
                fh.write(f"{stage}: {exc}\n")
            print(f"error: stage {stage!r} failed: {exc}", file=sys.stderr)
            return 2
    summary = {
        "config": cfg,
        "stages": plan,
        "subjects": ctx.subject_order(),
        "outputs": {rel: _sha256(os.path.join(out_dir, rel))
                    for rel in sorted(ctx.outputs)},
        "metrics": ctx.metrics_summary,
    }
    payload = json.dumps(summary, indent=2, sort_keys=True).encode() + b"\n"
    _write_atomic(os.path.join(out_dir, "summary.json"), payload)
    return 0


# ---------------------------------------------------------------------------
# Single-file subcommands

def _cmd_synth(args) -> int:
    cfg = load_config(args.config, {"seed": args.seed})
    spec = _synth_spec(cfg)
    recs = synth.gen_cohort(spec)
    synth.write_cohort(recs, args.out)
    print(f"wrote {len(recs)} subjects to {args.out}")
    return 0


def _cmd_preprocess(args) -> int:
    rec = load_recording(args.manifest)
    if args.electrode_set == "homan":
        rec = select_channels(rec, HOMAN_ELECTRODES)
    rows = [remove_line_noise(remove_drift(ch, rec.fs, cutoff_hz=args.drift_hz),
                              rec.fs, line_hz=args.line_hz)
            for ch in rec.data]
    clean = Recording(data=np.vstack(rows), fs=rec.fs, labels=rec.labels,
                      epochs=rec.epochs, diagnosis=rec.diagnosis,
                      ados2_score=rec.ados2_score, subject_id=rec.subject_id)
    os.makedirs(args.out, exist_ok=True)
    name = os.path.basename(args.manifest)
    save_recording(clean, os.path.join(args.out, name))
    print(f"wrote {os.path.join(args.out, name)}")
    return 0


def _cmd_bandpower(args) -> int:
    rec = extract_epoch(load_recording(args.manifest), args.epoch,
                        middle_third=args.middle_third)
    os.makedirs(args.out, exist_ok=True)
    for i, label in enumerate(rec.labels):
        mat = bandpower.power_matrix(DEFAULT_BANDS, rec.data[i],
                                     window_s=args.window_s, step_s=args.step_s,
                                     fs=rec.fs, electrode=label)
        bandpower.save_csv(mat, os.path.join(args.out, f"{label}.csv"))
    print(f"wrote {rec.n_channels} power matrices to {args.out}")
    return 0


def _cmd_wavelet(args) -> int:
    rec = load_recording(args.manifest)
    task = extract_epoch(rec, args.epoch, middle_third=args.middle_third)
    has_baseline = any(e.name == args.baseline_epoch for e in rec.epochs)
    baseline_rec = extract_epoch(rec, args.baseline_epoch) if has_baseline else None
    os.makedirs(args.out, exist_ok=True)
    scales = wavelet.scale_grid(task.fs, args.scales)
    for label in task.labels:
        sg = wavelet.cwt(task.channel(label), task.fs, scales, electrode=label)
        sg = wavelet.downsample_max(sg, min(args.target_cols, sg.n_times))
        if baseline_rec is not None:
            base = wavelet.cwt(baseline_rec.channel(label), task.fs, scales,
                               electrode=label)
            sg = wavelet.baseline_reference(sg, base)
        wavelet.save_csv(sg, os.path.join(args.out, f"{label}.csv"))
        wavelet.export_image(sg, os.path.join(args.out, f"{label}.pgm"))
    print(f"wrote {task.n_channels} scalograms to {args.out}")
    return 0


def _cmd_coherence(args) -> int:
    rec = extract_epoch(load_recording(args.manifest), args.epoch,
                        middle_third=args.middle_third)
    report = coherence.coherence_report(rec)
    coherence.save_csv(report, args.out)
    print(f"wrote {args.out} (left={report.left_mean:.4f}, "
          f"right={report.right_mean:.4f})")
    return 0


def _cmd_train(args) -> int:
    table = features.load_csv(args.features)
    if table.labels is None:
        print("error: features file has no class labels", file=sys.stderr)
        return 2
    os.makedirs(args.out, exist_ok=True)
    X, y = table.rows, np.asarray(table.labels)
    cv = "loocv" if args.cv == "loocv" else int(args.cv)
    factories = _model_factories(len(y), cv)
    named = []
    for name in args.models.split(","):
        factory = factories.get(name.strip())
        if factory is None:
            print(f"error: unknown model {name!r}", file=sys.stderr)
            return 2
        named.append((name, mlkit.cross_validate(X, y, factory, folds=cv,
                                                 seed=args.seed)))
        mlkit.export_model(factory().fit(X, y),
                           os.path.join(args.out, f"model_{name}.json"))
    text = mlkit.metrics_csv_rows(named)
    with open(os.path.join(args.out, "metrics.csv"), "w", encoding="utf-8") as fh:
        fh.write(text)
    print(text, end="")
    return 0


def _cmd_eval(args) -> int:
    model = mlkit.import_model(args.model)
    table = features.load_csv(args.features)
    preds = model.predict(table.rows)
    if table.labels is None:
        for sid, pred in zip(table.subject_ids, preds):
            print(f"{sid},{pred}")
        return 0
    metrics = mlkit.compute_metrics(preds, np.asarray(table.labels))
    text = mlkit.metrics_csv_rows([(os.path.basename(args.model), metrics)])
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    print(text, end="")
    return 0


def _cmd_run(args, stop_after: str | None = None) -> int:
    try:
        cfg = load_config(args.config, {"seed": args.seed,
                                        "electrode_set": args.electrode_set})
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    out_dir = args.out or cfg.get("out")
    if not out_dir:
        print("error: no output directory (use --out or config 'out')", file=sys.stderr)
        return 2
    return run(cfg, out_dir, jobs=args.jobs, dry_run=args.dry_run,
               stop_after=stop_after)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eegpipe",
        description="Batch EEG feature extraction and classification pipeline "
                    f"(kernel backend: {KERNEL_BACKEND})")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, config=False):
        if config:
            p.add_argument("--config", help="JSON pipeline configuration")
            p.add_argument("--seed", type=int, default=None, help="override config seed")
            p.add_argument("--out", help="output directory")
            p.add_argument("--electrode-set", dest="electrode_set",
                           choices=("homan", "all"), default=None)
            p.add_argument("--jobs", type=int, default=1,
                           help="worker threads for per-subject stages")
            p.add_argument("--dry-run", action="store_true",
                           help="validate config and print the stage plan only")

    p = sub.add_parser("run", help="execute the configured pipeline stages")
    add_common(p, config=True)

    p = sub.add_parser("features", help="run the pipeline up to the features stage")
    add_common(p, config=True)

    p = sub.add_parser("synth", help="generate a synthetic cohort")
    p.add_argument("--config", help="JSON config (synth section used)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)

    p = sub.add_parser("preprocess", help="drift + line-noise removal for one recording")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--electrode-set", dest="electrode_set",
                   choices=("homan", "all"), default="all")
    p.add_argument("--drift-hz", type=float, default=1.0)
    p.add_argument("--line-hz", type=float, default=60.0)

    p = sub.add_parser("bandpower", help="windowed band-power matrices for one recording")
    p.add_argument("--manifest", required=True)
    p.add_argument("--epoch", default="TASK1")
    p.add_argument("--middle-third", action="store_true")
    p.add_argument("--window-s", type=float, default=5.0)
    p.add_argument("--step-s", type=float, default=2.0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("wavelet", help="baseline-referenced scalograms for one recording")
    p.add_argument("--manifest", required=True)
    p.add_argument("--epoch", default="TASK1")
    p.add_argument("--middle-third", action="store_true")
    p.add_argument("--baseline-epoch", default="BASELINE")
    p.add_argument("--scales", type=int, default=150)
    p.add_argument("--target-cols", type=int, default=150)
    p.add_argument("--out", required=True)

    p = sub.add_parser("coherence", help="hemispheric coherence report for one recording")
    p.add_argument("--manifest", required=True)
    p.add_argument("--epoch", default="TASK1")
    p.add_argument("--middle-third", action="store_true")
    p.add_argument("--out", required=True)

    p = sub.add_parser("train", help="cross-validate classifiers on a feature table")
    p.add_argument("--features", required=True)
    p.add_argument("--models", default="gnb,logistic,knn")
    p.add_argument("--cv", default="loocv")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("eval", help="apply an exported model to a feature table")
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--out")

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "run": _cmd_run,
        "features": lambda a: _cmd_run(a, stop_after="features"),
        "synth": _cmd_synth,
        "preprocess": _cmd_preprocess,
        "bandpower": _cmd_bandpower,
        "wavelet": _cmd_wavelet,
        "coherence": _cmd_coherence,
        "train": _cmd_train,
        "eval": _cmd_eval,
    }
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
