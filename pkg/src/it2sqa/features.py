"""Time-domain feature extraction and per-feature quantization statistics.

Every window maps to a fixed 4-dimensional vector of O(n) statistics:

    0. skewness              population third standardized moment
    1. kurtosis_excess       population fourth standardized moment minus 3
    2. histogram_entropy     Shannon entropy (bits) of a 16-bin amplitude
                             histogram spanning the window's own min..max
    3. zero_crossing_rate    sign-change rate of the mean-removed window

All four are invariant under positive affine rescaling of the samples, so
quality judgements do not depend on sensor gain or DC offset. A window with
zero variance takes the all-zeros fallback vector.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .signal import ClassLabel, PpgWindow

FEATURE_NAMES = ("skewness", "kurtosis_excess", "histogram_entropy", "zero_crossing_rate")
N_FEATURES = len(FEATURE_NAMES)
HISTOGRAM_BINS = 16


@dataclass(frozen=True)
class FeatureVector:
    """Feature values of one window plus a back-reference to it."""

    values: tuple[float, ...]
    subject_id: str
    window_index: int

    def __post_init__(self):
        if len(self.values) != N_FEATURES:
            raise ValueError(f"expected {N_FEATURES} features, got {len(self.values)}")
        if not all(math.isfinite(v) for v in self.values):
            raise ValueError("feature values must be finite")


@dataclass(frozen=True)
class FeatureStats:
    """Per-feature quantile breakpoints and ranges fitted on training data.

    `degenerate[i]` flags features whose breakpoints collapsed (constant or
    heavily tied training values); the partition builder widens those.
    """

    breakpoints: tuple[tuple[float, ...], ...]
    minima: tuple[float, ...]
    maxima: tuple[float, ...]
    degenerate: tuple[bool, ...]
    n_terms: int


def extract_features(window: PpgWindow) -> FeatureVector:
    """Map one window to its feature vector. Deterministic, always finite."""
    x = np.asarray(window.samples, dtype=float)
    n = x.size
    mean = float(np.mean(x))
    centered = x - mean
    var = float(np.mean(centered * centered))
    if var == 0.0:
        return FeatureVector(
            values=(0.0, 0.0, 0.0, 0.0),
            subject_id=window.subject_id,
            window_index=window.window_index,
        )

    std = math.sqrt(var)
    z = centered / std
    skewness = float(np.mean(z**3))
    kurtosis_excess = float(np.mean(z**4)) - 3.0

    lo = float(np.min(x))
    hi = float(np.max(x))
    u = (x - lo) / (hi - lo)
    bins = np.minimum((u * HISTOGRAM_BINS).astype(int), HISTOGRAM_BINS - 1)
    counts = np.bincount(bins, minlength=HISTOGRAM_BINS)
    p = counts[counts > 0] / n
    entropy = float(-np.sum(p * np.log2(p)))

    pos = centered > 0.0
    zcr = float(np.count_nonzero(pos[1:] != pos[:-1])) / (n - 1)

    return FeatureVector(
        values=(skewness, kurtosis_excess, entropy, zcr),
        subject_id=window.subject_id,
        window_index=window.window_index,
    )


def fit_feature_stats(train: Sequence[FeatureVector], n_terms: int) -> FeatureStats:
    """Fit per-feature quantile breakpoints from training vectors only.

    Breakpoints sit at the j/n_terms quantiles, j = 1..n_terms-1 (linear
    interpolation between order statistics).
    """
    if not train:
        raise ValueError("train must be non-empty")
    if n_terms < 2:
        raise ValueError(f"n_terms must be >= 2, got {n_terms}")
    matrix = np.array([v.values for v in train], dtype=float)
    levels = [j / n_terms for j in range(1, n_terms)]

    breakpoints = []
    minima = []
    maxima = []
    degenerate = []
    for f in range(N_FEATURES):
        col = matrix[:, f]
        lo = float(np.min(col))
        hi = float(np.max(col))
        bps = tuple(float(q) for q in np.quantile(col, levels))
        collapsed = hi == lo or any(b2 <= b1 for b1, b2 in zip(bps, bps[1:]))
        breakpoints.append(bps)
        minima.append(lo)
        maxima.append(hi)
        degenerate.append(collapsed)
    return FeatureStats(
        breakpoints=tuple(breakpoints),
        minima=tuple(minima),
        maxima=tuple(maxima),
        degenerate=tuple(degenerate),
        n_terms=n_terms,
    )


def write_feature_csv(
    rows: Iterable[tuple[str, int, str, ClassLabel | None, FeatureVector]], path
) -> None:
    """Write a labelled feature table: subject_id, window_index, split, label, f0..f3."""
    header = ["subject_id", "window_index", "split", "label"] + [
        f"f{j}" for j in range(N_FEATURES)
    ]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for subject_id, window_index, split, label, vector in rows:
            writer.writerow(
                [subject_id, window_index, split, label.value if label else ""]
                + [repr(v) for v in vector.values]
            )
