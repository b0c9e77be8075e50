"""PPG signal generation, ingestion and windowing.

Real recordings are private in this line of work, so the module ships a
deterministic synthetic corpus generator: quasi-periodic two-bump pulse
trains per subject, corrupted by seeded motion-like artifacts, segmented
into non-overlapping fixed-length windows with per-window quality labels.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, fields, replace
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError, CorpusFormatError

DEFAULT_FS = 200.0
DEFAULT_WINDOW_SECONDS = 3.0

SPLITS = ("train", "validation", "test")

ARTIFACT_KINDS = ("baseline_wander", "spike", "dropout", "noise_burst")


class ClassLabel(str, Enum):
    """Binary window quality: Noisy (unacceptable) vs Clean (acceptable)."""

    NOISY = "Noisy"
    CLEAN = "Clean"


@dataclass(frozen=True, eq=False)
class PpgWindow:
    """One fixed-length PPG segment with its provenance and optional label."""

    samples: np.ndarray
    fs: float
    subject_id: str
    window_index: int
    label: ClassLabel | None = None

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        object.__setattr__(self, "samples", samples)
        if self.fs <= 0:
            raise ValueError(f"fs must be positive, got {self.fs}")
        if self.window_index < 0:
            raise ValueError(f"window_index must be >= 0, got {self.window_index}")
        if samples.ndim != 1 or samples.size == 0:
            raise ValueError("samples must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(samples)):
            bad = int(np.flatnonzero(~np.isfinite(samples))[0])
            raise ValueError(f"non-finite sample at index {bad}")


@dataclass
class SubjectCorpus:
    """All labelled windows of one subject plus their split tags."""

    subject_id: str
    windows: list[PpgWindow]
    splits: list[str]

    def __post_init__(self):
        if len(self.windows) != len(self.splits):
            raise ValueError("one split tag per window required")
        for tag in self.splits:
            if tag not in SPLITS:
                raise ValueError(f"unknown split tag {tag!r}")


@dataclass(frozen=True)
class PulseMorphology:
    """Shape parameters of one synthetic beat, in fractions of the period.

    Each beat is the sum of two localized bumps: the systolic peak and a
    smaller dicrotic bump. Jitter fields control beat-to-beat variation.
    """

    systolic_frac: float = 0.13
    systolic_width: float = 0.07
    dicrotic_frac: float = 0.40
    dicrotic_width: float = 0.09
    dicrotic_amp: float = 0.35
    interval_jitter: float = 0.03
    amplitude_jitter: float = 0.05

    def __post_init__(self):
        if not 0.0 < self.systolic_frac < self.dicrotic_frac < 1.0:
            raise ValueError("need 0 < systolic_frac < dicrotic_frac < 1")
        for name in ("systolic_width", "dicrotic_width"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not 0.0 <= self.dicrotic_amp <= 1.0:
            raise ValueError("dicrotic_amp must lie in [0, 1]")
        for name in ("interval_jitter", "amplitude_jitter"):
            if not 0.0 <= getattr(self, name) < 0.2:
                raise ValueError(f"{name} must lie in [0, 0.2)")


@dataclass(frozen=True)
class StudyConfig:
    """Parameters of a synthetic multi-subject study."""

    n_subjects: int = 10
    windows_per_subject: int = 33
    noisy_fraction: float = 0.19
    subject_shift: float = 0.25
    fs: float = DEFAULT_FS
    window_seconds: float = DEFAULT_WINDOW_SECONDS
    seed: int = 7

    @classmethod
    def from_mapping(cls, mapping: dict) -> "StudyConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(mapping) - known)
        if unknown:
            raise ConfigError(f"unknown study config keys: {', '.join(unknown)}")
        try:
            return cls(**mapping)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad study config: {exc}") from exc


def window_sample_count(fs: float, window_seconds: float) -> int:
    return int(round(window_seconds * fs))


def segment_windows(
    signal: Sequence[float],
    fs: float,
    window_seconds: float = DEFAULT_WINDOW_SECONDS,
    subject_id: str = "",
) -> list[PpgWindow]:
    """Cut a signal into non-overlapping windows, discarding the partial tail.

    Returns floor(len(signal) / round(window_seconds * fs)) windows in order.
    Non-finite samples are rejected with the offending index.
    """
    if fs <= 0:
        raise ValueError(f"fs must be positive, got {fs}")
    if window_seconds <= 0:
        raise ValueError(f"window_seconds must be positive, got {window_seconds}")
    x = np.asarray(signal, dtype=float)
    if x.ndim != 1:
        raise ValueError("signal must be 1-D")
    if not np.all(np.isfinite(x)):
        bad = int(np.flatnonzero(~np.isfinite(x))[0])
        raise ValueError(f"non-finite sample at index {bad}")
    size = window_sample_count(fs, window_seconds)
    n_windows = len(x) // size
    return [
        PpgWindow(
            samples=x[i * size : (i + 1) * size].copy(),
            fs=fs,
            subject_id=subject_id,
            window_index=i,
        )
        for i in range(n_windows)
    ]


def synth_clean_ppg(
    heart_rate_bpm: float,
    duration_s: float,
    fs: float = DEFAULT_FS,
    morphology: PulseMorphology | None = None,
    seed: int = 0,
) -> np.ndarray:
    """Generate a clean quasi-periodic PPG-like pulse train.

    Each beat contributes a systolic Gaussian bump plus a smaller dicrotic
    bump; beat interval and amplitude carry small seeded jitter. The output
    is a pure function of the arguments.
    """
    if not 30.0 <= heart_rate_bpm <= 220.0:
        raise ValueError(f"heart_rate_bpm must lie in [30, 220], got {heart_rate_bpm}")
    if duration_s <= 0:
        raise ValueError(f"duration_s must be positive, got {duration_s}")
    if fs <= 0:
        raise ValueError(f"fs must be positive, got {fs}")
    morph = morphology if morphology is not None else PulseMorphology()
    rng = np.random.default_rng(seed)

    n = int(round(duration_s * fs))
    t = np.arange(n) / fs
    period = 60.0 / heart_rate_bpm
    out = np.zeros(n)

    # Start one beat early and run one beat past the end so boundary
    # windows see full pulse tails.
    onset = -period
    while onset < duration_s + period:
        zi = float(np.clip(rng.standard_normal(), -3.0, 3.0))
        za = float(np.clip(rng.standard_normal(), -3.0, 3.0))
        beat_period = period * (1.0 + morph.interval_jitter * zi)
        beat_period = max(beat_period, 0.2 * period)
        amp = max(1.0 + morph.amplitude_jitter * za, 0.1)

        sys_center = onset + morph.systolic_frac * beat_period
        sys_width = morph.systolic_width * beat_period
        dic_center = onset + morph.dicrotic_frac * beat_period
        dic_width = morph.dicrotic_width * beat_period
        out += amp * np.exp(-0.5 * ((t - sys_center) / sys_width) ** 2)
        out += amp * morph.dicrotic_amp * np.exp(-0.5 * ((t - dic_center) / dic_width) ** 2)

        onset += beat_period
    return out


def _rms(x: np.ndarray) -> float:
    return float(np.sqrt(np.mean(np.square(x))))


def inject_artifact(
    signal: Sequence[float],
    kind: str,
    severity: float,
    span: tuple[int, int],
    seed: int = 0,
    fs: float = DEFAULT_FS,
    window_seconds: float = DEFAULT_WINDOW_SECONDS,
) -> tuple[np.ndarray, set[int]]:
    """Corrupt `signal` over the half-open sample interval `span`.

    Severity in [0, 1] scales the corruption amplitude linearly against the
    RMS of the affected segment; severity 0 is the identity and yields an
    empty mask. The returned mask holds every complete-window index that
    intersects the span.
    """
    x = np.asarray(signal, dtype=float)
    if kind not in ARTIFACT_KINDS:
        raise ValueError(f"unknown artifact kind {kind!r}; expected one of {ARTIFACT_KINDS}")
    if not 0.0 <= severity <= 1.0:
        raise ValueError(f"severity must lie in [0, 1], got {severity}")
    start, stop = span
    if not 0 <= start < stop <= len(x):
        raise ValueError(f"span {span} out of bounds for signal of length {len(x)}")

    out = x.copy()
    if severity == 0.0:
        return out, set()

    seg = x[start:stop]
    base = _rms(seg)
    if base == 0.0:
        base = _rms(x) or 1.0
    rng = np.random.default_rng(seed)
    m = stop - start

    if kind == "baseline_wander":
        freq = rng.uniform(0.2, 0.7)
        phase = rng.uniform(0.0, 2.0 * np.pi)
        tloc = np.arange(m) / fs
        out[start:stop] += severity * 3.0 * base * np.sin(2.0 * np.pi * freq * tloc + phase)
    elif kind == "spike":
        n_spikes = max(1, int(round(m / fs * 6.0)))
        positions = rng.choice(m, size=min(n_spikes, m), replace=False)
        half = max(2, int(round(0.015 * fs)))
        amp = severity * 8.0 * base
        for p in positions:
            sign = 1.0 if rng.random() < 0.5 else -1.0
            lo = max(0, int(p) - half)
            hi = min(m, int(p) + half + 1)
            kernel = 1.0 - np.abs(np.arange(lo, hi) - int(p)) / (half + 1)
            out[start + lo : start + hi] += sign * amp * kernel
    elif kind == "dropout":
        # Sensor detachment: collapse the segment toward its floor value.
        floor = float(seg.min())
        out[start:stop] = floor + (1.0 - severity) * (seg - floor)
    elif kind == "noise_burst":
        out[start:stop] += rng.normal(0.0, severity * 2.5 * base, size=m)

    size = window_sample_count(fs, window_seconds)
    n_complete = len(x) // size
    first = start // size
    last = (stop - 1) // size
    mask = {w for w in range(first, last + 1) if w < n_complete}
    return out, mask


def _draw_subject_params(
    rng: np.random.Generator, subject_shift: float
) -> tuple[float, PulseMorphology]:
    """Draw one subject's heart rate and beat morphology.

    subject_shift scales the inter-subject dispersion; zero collapses every
    subject onto the same parameter tuple.
    """
    hr = 75.0 * (1.0 + subject_shift * rng.uniform(-0.5, 0.5))
    hr = float(np.clip(hr, 45.0, 160.0))
    morph = PulseMorphology(
        systolic_width=float(np.clip(0.07 * (1.0 + subject_shift * rng.uniform(-0.4, 0.4)), 0.03, 0.12)),
        dicrotic_frac=float(np.clip(0.40 * (1.0 + subject_shift * rng.uniform(-0.2, 0.2)), 0.25, 0.60)),
        dicrotic_width=float(np.clip(0.09 * (1.0 + subject_shift * rng.uniform(-0.3, 0.3)), 0.04, 0.15)),
        dicrotic_amp=float(np.clip(0.35 * (1.0 + subject_shift * rng.uniform(-0.5, 0.5)), 0.10, 0.70)),
    )
    return hr, morph


def _stratified_split(
    rng: np.random.Generator,
    noisy_idx: Sequence[int],
    clean_idx: Sequence[int],
    fractions: tuple[float, float, float] = (0.6, 0.2, 0.2),
) -> dict[int, str]:
    """Assign split tags per window, stratified by class."""
    assignment: dict[int, str] = {}
    for idx_group in (noisy_idx, clean_idx):
        order = [int(i) for i in rng.permutation(len(idx_group))]
        shuffled = [idx_group[i] for i in order]
        n = len(shuffled)
        n_train = min(n, int(round(n * fractions[0])))
        n_val = min(n - n_train, int(round(n * fractions[1])))
        for j, w in enumerate(shuffled):
            if j < n_train:
                assignment[w] = "train"
            elif j < n_train + n_val:
                assignment[w] = "validation"
            else:
                assignment[w] = "test"
    return assignment


def build_synthetic_study(
    n_subjects: int,
    windows_per_subject: int,
    noisy_fraction: float,
    subject_shift: float,
    seed: int,
    fs: float = DEFAULT_FS,
    window_seconds: float = DEFAULT_WINDOW_SECONDS,
) -> list[SubjectCorpus]:
    """Build a labelled multi-subject synthetic study.

    Per-subject heart rate and morphology are drawn deterministically from
    `seed` with dispersion controlled by `subject_shift`. A seeded artifact
    is injected strictly inside each designated noisy window, so the class
    proportion lands within one window of `noisy_fraction` per subject.
    """
    if n_subjects < 1:
        raise ValueError(f"n_subjects must be >= 1, got {n_subjects}")
    if not 0.0 < noisy_fraction < 1.0:
        raise ValueError(f"noisy_fraction must lie in (0, 1), got {noisy_fraction}")
    if windows_per_subject * noisy_fraction < 1.0:
        raise ValueError(
            "windows_per_subject * noisy_fraction < 1: no noisy window would be generated"
        )
    if subject_shift < 0:
        raise ValueError(f"subject_shift must be >= 0, got {subject_shift}")

    size = window_sample_count(fs, window_seconds)
    n_noisy = int(round(windows_per_subject * noisy_fraction))
    n_noisy = min(max(n_noisy, 1), windows_per_subject - 1)

    study = []
    root = np.random.SeedSequence(seed)
    for i, child in enumerate(root.spawn(n_subjects)):
        rng = np.random.default_rng(child)
        subject_id = f"s{i:02d}"
        hr, morph = _draw_subject_params(rng, subject_shift)
        sig = synth_clean_ppg(
            hr,
            windows_per_subject * window_seconds,
            fs,
            morph,
            seed=int(rng.integers(2**63)),
        )

        noisy_windows = sorted(int(w) for w in rng.choice(windows_per_subject, n_noisy, replace=False))
        masked: set[int] = set()
        for w in noisy_windows:
            kind = ARTIFACT_KINDS[int(rng.integers(len(ARTIFACT_KINDS)))]
            severity = float(rng.uniform(0.6, 1.0))
            offset = int(rng.integers(size // 8, size // 4 + 1))
            length = int(rng.integers(size // 3, size // 2 + 1))
            span = (w * size + offset, w * size + offset + length)
            sig, mask = inject_artifact(
                sig, kind, severity, span,
                seed=int(rng.integers(2**63)), fs=fs, window_seconds=window_seconds,
            )
            masked |= mask

        windows = segment_windows(sig, fs, window_seconds, subject_id=subject_id)
        windows = [
            replace(w, label=ClassLabel.NOISY if w.window_index in masked else ClassLabel.CLEAN)
            for w in windows
        ]
        noisy_idx = [w.window_index for w in windows if w.label is ClassLabel.NOISY]
        clean_idx = [w.window_index for w in windows if w.label is ClassLabel.CLEAN]
        assignment = _stratified_split(rng, noisy_idx, clean_idx)
        study.append(
            SubjectCorpus(
                subject_id=subject_id,
                windows=windows,
                splits=[assignment[w.window_index] for w in windows],
            )
        )
    return study


def build_study(config: StudyConfig) -> list[SubjectCorpus]:
    return build_synthetic_study(
        config.n_subjects,
        config.windows_per_subject,
        config.noisy_fraction,
        config.subject_shift,
        config.seed,
        fs=config.fs,
        window_seconds=config.window_seconds,
    )


# ---------------------------------------------------------------------------
# File formats
# ---------------------------------------------------------------------------

def write_corpus_csv(study: Iterable[SubjectCorpus], path) -> None:
    """Write a study as one CSV: subject_id, window_index, split, label, s0..sN.

    Samples are written as decimal text via repr, which round-trips floats
    exactly. Unlabelled windows carry an empty label field.
    """
    study = list(study)
    if not study or not study[0].windows:
        raise ValueError("cannot write an empty study")
    size = len(study[0].windows[0].samples)
    header = ["subject_id", "window_index", "split", "label"] + [f"s{j}" for j in range(size)]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for corpus in study:
            for window, split in zip(corpus.windows, corpus.splits):
                if len(window.samples) != size:
                    raise ValueError("all windows in a corpus file must share one length")
                label = window.label.value if window.label is not None else ""
                writer.writerow(
                    [corpus.subject_id, window.window_index, split, label]
                    + [repr(float(v)) for v in window.samples]
                )


def read_corpus_csv(path, fs: float = DEFAULT_FS) -> list[SubjectCorpus]:
    """Read a corpus CSV back into per-subject corpora.

    Any malformed row is rejected with its 1-based row number. The sampling
    rate is not stored in the file and must be supplied by the caller.
    """
    per_subject: dict[str, list[tuple[int, str, ClassLabel | None, np.ndarray]]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CorpusFormatError("empty file: header row is mandatory", row=1)
        if header[:4] != ["subject_id", "window_index", "split", "label"]:
            raise CorpusFormatError(
                "header must start with subject_id,window_index,split,label", row=1
            )
        n_cols = len(header)
        if n_cols < 5:
            raise CorpusFormatError("no sample columns found", row=1)
        for row_no, row in enumerate(reader, start=2):
            if len(row) != n_cols:
                raise CorpusFormatError(
                    f"expected {n_cols} columns, found {len(row)}", row=row_no
                )
            subject_id, idx_text, split, label_text = row[:4]
            try:
                window_index = int(idx_text)
            except ValueError:
                raise CorpusFormatError(f"bad window_index {idx_text!r}", row=row_no)
            if split not in SPLITS:
                raise CorpusFormatError(f"bad split tag {split!r}", row=row_no)
            if label_text == "":
                label = None
            else:
                try:
                    label = ClassLabel(label_text)
                except ValueError:
                    raise CorpusFormatError(f"bad label {label_text!r}", row=row_no)
            try:
                samples = np.array([float(v) for v in row[4:]], dtype=float)
            except ValueError:
                raise CorpusFormatError("bad sample value", row=row_no)
            if not np.all(np.isfinite(samples)):
                raise CorpusFormatError("non-finite sample value", row=row_no)
            per_subject.setdefault(subject_id, []).append((window_index, split, label, samples))

    study = []
    for subject_id in sorted(per_subject):
        rows = sorted(per_subject[subject_id], key=lambda r: r[0])
        windows = [
            PpgWindow(samples=s, fs=fs, subject_id=subject_id, window_index=w, label=lab)
            for w, _, lab, s in rows
        ]
        study.append(
            SubjectCorpus(
                subject_id=subject_id,
                windows=windows,
                splits=[split for _, split, _, _ in rows],
            )
        )
    return study


def read_signal_csv(path) -> np.ndarray:
    """Read a raw signal from a single-column CSV of samples."""
    values = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row_no, line in enumerate(fh, start=1):
            text = line.strip()
            if not text:
                continue
            try:
                values.append(float(text))
            except ValueError:
                raise CorpusFormatError(f"bad sample value {text!r}", row=row_no)
    if not values:
        raise CorpusFormatError("no samples found", row=1)
    x = np.array(values, dtype=float)
    if not np.all(np.isfinite(x)):
        bad = int(np.flatnonzero(~np.isfinite(x))[0])
        raise CorpusFormatError(f"non-finite sample at index {bad}")
    return x
