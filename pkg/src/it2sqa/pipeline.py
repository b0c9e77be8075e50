"""File-level orchestration shared by the CLI and the HTTP service.

Every run validates its inputs, writes its outputs plus a manifest with
content hashes next to them, and is a pure function of (inputs, config,
seed): re-running reproduces byte-identical files.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import re
import sys
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import __version__
from .errors import ConfigError, PipelineError, ValidationError
from .features import FeatureVector, extract_features, write_feature_csv
from .fusion import DEFAULT_ALPHA_GRID, FusedModel, classify, sweep_alpha, write_sweep_csv
from .fuzzy import RuleBase, load_model, save_model
from .learner import GaConfig, train_study, write_training_log
from .metrics import AggregateReport, aggregate, confusion, report
from .signal import (
    ClassLabel,
    StudyConfig,
    SubjectCorpus,
    build_study,
    read_corpus_csv,
    read_signal_csv,
    segment_windows,
    write_corpus_csv,
)

SI_MODEL_FILE = "si.json"


@dataclass(frozen=True)
class RunConfig:
    study: StudyConfig = StudyConfig()
    ga: GaConfig = GaConfig()


def load_run_config(path) -> RunConfig:
    """Parse a TOML config with optional [study] and [ga] tables.

    Unknown tables or keys are rejected.
    """
    with open(path, "rb") as fh:
        try:
            doc = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"bad config file {path}: {exc}") from exc
    unknown = sorted(set(doc) - {"study", "ga"})
    if unknown:
        raise ConfigError(f"unknown config tables: {', '.join(unknown)}")
    return RunConfig(
        study=StudyConfig.from_mapping(doc.get("study", {})),
        ga=GaConfig.from_mapping(doc.get("ga", {})),
    )


def parse_grid(text: str) -> tuple[float, ...]:
    """Parse an `a:step:b` alpha grid, endpoints inclusive."""
    parts = text.split(":")
    if len(parts) != 3:
        raise ValidationError(f"grid must look like a:step:b, got {text!r}")
    try:
        a, step, b = (float(p) for p in parts)
    except ValueError:
        raise ValidationError(f"grid must hold three numbers, got {text!r}")
    if step <= 0:
        raise ValidationError("grid step must be positive")
    if not 0.0 <= a <= b <= 1.0:
        raise ValidationError("grid endpoints must satisfy 0 <= a <= b <= 1")
    count = int(math.floor((b - a) / step + 1e-9)) + 1
    return tuple(round(a + i * step, 10) for i in range(count))


# ---------------------------------------------------------------------------
# Manifests
# ---------------------------------------------------------------------------

def file_sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(
    out_dir: Path,
    command: str,
    seed: int | None,
    config_path,
    input_paths: Sequence,
    output_paths: Sequence,
) -> Path:
    manifest = {
        "command": command,
        "tool_version": __version__,
        "seed": seed,
        "config_path": str(config_path) if config_path is not None else None,
        "inputs": {str(p): file_sha256(p) for p in input_paths},
        "outputs": {str(p): file_sha256(p) for p in output_paths},
    }
    path = out_dir / "manifest.json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _prepare_out_dir(out_dir) -> Path:
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except (OSError, FileExistsError) as exc:
        raise PipelineError(f"cannot create output directory {out}: {exc}") from exc
    if not out.is_dir():
        raise PipelineError(f"output path {out} is not a directory")
    return out


# ---------------------------------------------------------------------------
# Feature assembly
# ---------------------------------------------------------------------------

def corpus_features(corpus: SubjectCorpus) -> list[tuple[str, FeatureVector, ClassLabel | None]]:
    """(split, vector, label) per window of one subject."""
    out = []
    for window, split in zip(corpus.windows, corpus.splits):
        out.append((split, extract_features(window), window.label))
    return out


def split_features(
    study: Sequence[SubjectCorpus], split: str
) -> dict[str, tuple[list[FeatureVector], list[ClassLabel]]]:
    """Per-subject labelled feature vectors restricted to one split."""
    data: dict[str, tuple[list[FeatureVector], list[ClassLabel]]] = {}
    for corpus in study:
        vectors: list[FeatureVector] = []
        labels: list[ClassLabel] = []
        for split_tag, vector, label in corpus_features(corpus):
            if split_tag != split:
                continue
            if label is None:
                raise ValidationError(
                    f"window {vector.window_index} of subject {corpus.subject_id} "
                    f"has no label; cannot use it in split {split!r}"
                )
            vectors.append(vector)
            labels.append(label)
        if vectors:
            data[corpus.subject_id] = (vectors, labels)
    return data


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def run_synth(config: RunConfig, out_dir, config_path=None, seed: int | None = None) -> dict:
    """Build the synthetic study and emit corpus + feature CSVs."""
    study_config = config.study if seed is None else replace(config.study, seed=seed)
    out = _prepare_out_dir(out_dir)
    study = build_study(study_config)

    corpus_path = out / "corpus.csv"
    write_corpus_csv(study, corpus_path)
    feature_rows = []
    n_noisy = 0
    n_total = 0
    for corpus in study:
        for (split, vector, label), window in zip(corpus_features(corpus), corpus.windows):
            feature_rows.append((corpus.subject_id, window.window_index, split, label, vector))
            n_total += 1
            n_noisy += label is ClassLabel.NOISY
    features_path = out / "features.csv"
    write_feature_csv(feature_rows, features_path)

    manifest_path = write_manifest(
        out, "synth", study_config.seed, config_path,
        input_paths=[config_path] if config_path else [],
        output_paths=[corpus_path, features_path],
    )
    return {
        "corpus_path": str(corpus_path),
        "features_path": str(features_path),
        "manifest_path": str(manifest_path),
        "n_subjects": len(study),
        "n_windows": n_total,
        "n_noisy": n_noisy,
        "n_clean": n_total - n_noisy,
    }


def _sanitize(subject_id: str) -> str:
    return re.sub(r"[^A-Za-z0-9_-]", "_", subject_id)


def run_train(
    corpus_path, config: RunConfig, out_dir, config_path=None,
    seed: int | None = None, parallel: bool = False,
) -> dict:
    """Train the SI base and per-subject SD bases from a corpus file."""
    corpus_path = Path(corpus_path)
    if not corpus_path.exists():
        raise ValidationError(f"corpus file not found: {corpus_path}")
    out = _prepare_out_dir(out_dir)
    ga_config = config.ga if seed is None else replace(config.ga, seed=seed)

    study = read_corpus_csv(corpus_path, fs=config.study.fs)
    train_data = split_features(study, "train")
    if not train_data:
        raise ValidationError("corpus has no labelled train windows")

    result = train_study(train_data, ga_config, parallel=parallel)
    if not result.sd:
        raise PipelineError(
            "no trainable subjects: " + "; ".join(f"{s}: {m}" for s, m in result.failures.items())
        )

    outputs = []
    si_path = out / SI_MODEL_FILE
    save_model(result.si.rule_base, si_path)
    write_training_log(result.si.history, out / "train_log_si.csv")
    outputs.extend([si_path, out / "train_log_si.csv"])

    sd_paths: dict[str, str] = {}
    for subject_id, evolved in sorted(result.sd.items()):
        path = out / f"sd_{_sanitize(subject_id)}.json"
        save_model(evolved.rule_base, path, subject_id=subject_id)
        log_path = out / f"train_log_sd_{_sanitize(subject_id)}.csv"
        write_training_log(evolved.history, log_path)
        sd_paths[subject_id] = str(path)
        outputs.extend([path, log_path])

    manifest_path = write_manifest(
        out, "train", ga_config.seed, config_path,
        input_paths=[corpus_path] + ([config_path] if config_path else []),
        output_paths=outputs,
    )
    return {
        "si_model_path": str(si_path),
        "sd_model_paths": sd_paths,
        "skipped_subjects": dict(result.failures),
        "best_fitness_si": result.si.best_fitness,
        "manifest_path": str(manifest_path),
    }


def load_models(models_dir) -> tuple[RuleBase, dict[str, RuleBase]]:
    """Load si.json plus every sd_*.json from a directory."""
    models_dir = Path(models_dir)
    si_path = models_dir / SI_MODEL_FILE
    if not si_path.exists():
        raise ValidationError(f"missing model file: {si_path}")
    si_model, _ = load_model(si_path)
    sd_models: dict[str, RuleBase] = {}
    for path in sorted(models_dir.glob("sd_*.json")):
        base, subject_id = load_model(path)
        if subject_id is None:
            subject_id = path.stem[len("sd_"):]
        sd_models[subject_id] = base
    if not sd_models:
        raise ValidationError(f"no sd_*.json model files found in {models_dir}")
    return si_model, sd_models


MODEL_ROWS = ("global", "personalised", "fused")


def _evaluation_rows(
    si_model: RuleBase,
    sd_models: dict[str, RuleBase],
    data: dict[str, tuple[list[FeatureVector], list[ClassLabel]]],
    alpha: float,
) -> tuple[list[dict], list[dict]]:
    """Aggregate and per-subject metric rows for alpha 0, 1 and the request."""
    model_specs = [("global", 0.0), ("personalised", 1.0), ("fused", alpha)]
    subjects = sorted(set(data) & set(sd_models))
    if not subjects:
        raise ValidationError("no subject has both evaluation data and an SD model")
    aggregate_rows = []
    subject_rows = []
    for model_type, a in model_specs:
        reports = []
        for subject_id in subjects:
            vectors, labels = data[subject_id]
            fused = FusedModel(sd=sd_models[subject_id], si=si_model, alpha=a)
            predictions = [classify(fused, x).predicted for x in vectors]
            rep = report(confusion(predictions, labels))
            reports.append(rep)
            subject_rows.append(
                {
                    "model_type": model_type,
                    "alpha": a,
                    "subject_id": subject_id,
                    "sensitivity": rep.sensitivity,
                    "specificity": rep.specificity,
                    "gmean": rep.gmean,
                    "mcc": rep.mcc,
                    "acc": rep.acc,
                }
            )
        agg: AggregateReport = aggregate(reports)
        row = {"model_type": model_type, "alpha": a}
        for name in ("sensitivity", "specificity", "gmean", "mcc", "acc"):
            row[f"{name}_mean"] = getattr(agg.mean, name)
            row[f"{name}_std"] = getattr(agg.std, name)
        aggregate_rows.append(row)
    return aggregate_rows, subject_rows


def _write_rows_csv(rows: list[dict], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(rows[0]))
        for row in rows:
            writer.writerow([v if isinstance(v, str) else repr(v) for v in row.values()])


def run_evaluate(
    models_dir, corpus_path, alpha: float, split: str, out_dir, fs: float = 200.0
) -> dict:
    """Metric report for the fused model plus both boundary models."""
    if not 0.0 <= alpha <= 1.0:
        raise ValidationError(f"alpha must lie in [0, 1], got {alpha}")
    if split not in ("train", "validation", "test"):
        raise ValidationError(f"unknown split {split!r}")
    corpus_path = Path(corpus_path)
    if not corpus_path.exists():
        raise ValidationError(f"corpus file not found: {corpus_path}")
    out = _prepare_out_dir(out_dir)

    si_model, sd_models = load_models(models_dir)
    study = read_corpus_csv(corpus_path, fs=fs)
    data = split_features(study, split)
    if not data:
        raise ValidationError(f"corpus has no labelled windows in split {split!r}")

    aggregate_rows, subject_rows = _evaluation_rows(si_model, sd_models, data, alpha)
    report_path = out / "report.csv"
    subjects_path = out / "report_subjects.csv"
    _write_rows_csv(aggregate_rows, report_path)
    _write_rows_csv(subject_rows, subjects_path)

    manifest_path = write_manifest(
        out, "evaluate", None, None,
        input_paths=[corpus_path, Path(models_dir) / SI_MODEL_FILE],
        output_paths=[report_path, subjects_path],
    )
    return {
        "report_path": str(report_path),
        "report_subjects_path": str(subjects_path),
        "manifest_path": str(manifest_path),
        "rows": aggregate_rows,
        "split": split,
        "subjects": sorted(set(data) & set(sd_models)),
    }


def run_sweep(
    models_dir, corpus_path, grid: Sequence[float], split: str, out_dir, fs: float = 200.0
) -> dict:
    """Alpha sweep over a corpus split, emitting per-subject and summary CSVs."""
    if split not in ("train", "validation", "test"):
        raise ValidationError(f"unknown split {split!r}")
    corpus_path = Path(corpus_path)
    if not corpus_path.exists():
        raise ValidationError(f"corpus file not found: {corpus_path}")
    out = _prepare_out_dir(out_dir)

    si_model, sd_models = load_models(models_dir)
    study = read_corpus_csv(corpus_path, fs=fs)
    data = split_features(study, split)
    data = {s: d for s, d in data.items() if s in sd_models}
    if not data:
        raise ValidationError(f"no subject has both an SD model and {split!r} windows")

    try:
        result = sweep_alpha(sd_models, si_model, data, grid=tuple(grid))
    except ValueError as exc:
        raise ValidationError(str(exc)) from exc

    rows_path = out / "sweep_subjects.csv"
    summary_path = out / "sweep_summary.csv"
    write_sweep_csv(result, rows_path, summary_path)
    manifest_path = write_manifest(
        out, "sweep", None, None,
        input_paths=[corpus_path, Path(models_dir) / SI_MODEL_FILE],
        output_paths=[rows_path, summary_path],
    )
    best = result.best()
    return {
        "sweep_subjects_path": str(rows_path),
        "sweep_summary_path": str(summary_path),
        "manifest_path": str(manifest_path),
        "summary": [
            {"alpha": s.alpha, "mean_mcc": s.mean_mcc, "std_mcc": s.std_mcc}
            for s in result.summary
        ],
        "best_alpha": best.alpha,
        "best_mean_mcc": best.mean_mcc,
        "split": split,
    }


def run_ingest(
    raw_path, fs: float, out_dir, subject_id: str = "imported",
    window_seconds: float = 3.0,
) -> dict:
    """Window a raw single-column signal CSV into an unlabelled corpus."""
    raw_path = Path(raw_path)
    if not raw_path.exists():
        raise ValidationError(f"signal file not found: {raw_path}")
    if fs <= 0:
        raise ValidationError(f"fs must be positive, got {fs}")
    out = _prepare_out_dir(out_dir)

    samples = read_signal_csv(raw_path)
    windows = segment_windows(samples, fs, window_seconds, subject_id=subject_id)
    if not windows:
        raise ValidationError(
            f"signal too short: {len(samples)} samples is less than one "
            f"{window_seconds} s window at {fs} Hz"
        )
    corpus = SubjectCorpus(
        subject_id=subject_id, windows=windows, splits=["test"] * len(windows)
    )
    corpus_path = out / "corpus.csv"
    write_corpus_csv([corpus], corpus_path)
    feature_rows = [
        (subject_id, w.window_index, split, w.label, extract_features(w))
        for w, split in zip(corpus.windows, corpus.splits)
    ]
    features_path = out / "features.csv"
    write_feature_csv(feature_rows, features_path)
    manifest_path = write_manifest(
        out, "ingest", None, None,
        input_paths=[raw_path],
        output_paths=[corpus_path, features_path],
    )
    return {
        "corpus_path": str(corpus_path),
        "features_path": str(features_path),
        "manifest_path": str(manifest_path),
        "n_windows": len(windows),
        "samples_discarded": len(samples) - len(windows) * len(windows[0].samples),
    }
