"""Late fusion of the subject-dependent and subject-independent rule bases.

For each class, the fused score sums alpha-weighted overall association
degrees: SD rules contribute alpha * h, SI rules (1 - alpha) * h. The
predicted class is the argmax; exact ties fail closed to Noisy.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

from .features import FeatureVector
from .fuzzy import RuleBase, association_degree
from .metrics import confusion, report
from .signal import ClassLabel

DEFAULT_ALPHA_GRID = tuple(round(0.1 * i, 10) for i in range(11))


@dataclass(frozen=True)
class FusedModel:
    """One SD rule base, one SI rule base, and the personalisation score."""

    sd: RuleBase
    si: RuleBase
    alpha: float

    def __post_init__(self):
        if self.sd.origin != "SD":
            raise ValueError(f"sd rule base has origin {self.sd.origin!r}")
        if self.si.origin != "SI":
            raise ValueError(f"si rule base has origin {self.si.origin!r}")
        if self.sd.feature_names != self.si.feature_names:
            raise ValueError("rule bases must share one feature-set descriptor")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")


@dataclass(frozen=True)
class SqaDecision:
    """Predicted class, per-class evidence sums, and the quality index."""

    predicted: ClassLabel
    score_noisy: float
    score_clean: float
    sqi: float


def _class_sums(base: RuleBase, x: FeatureVector) -> tuple[float, float]:
    noisy = 0.0
    clean = 0.0
    for rule in base.rules:
        h = association_degree(rule, x, base.partitions).overall
        if rule.consequent is ClassLabel.NOISY:
            noisy += h
        else:
            clean += h
    return noisy, clean


def _decide(score_noisy: float, score_clean: float) -> SqaDecision:
    predicted = ClassLabel.CLEAN if score_clean > score_noisy else ClassLabel.NOISY
    total = score_clean + score_noisy
    sqi = score_clean / total if total > 0.0 else 0.0
    return SqaDecision(
        predicted=predicted, score_noisy=score_noisy, score_clean=score_clean, sqi=sqi
    )


def classify_single(base: RuleBase, x: FeatureVector) -> SqaDecision:
    """Reason over one rule base alone (no fusion)."""
    if len(x.values) != base.dimension:
        raise ValueError(
            f"feature dimension mismatch: expected {base.dimension}, got {len(x.values)}"
        )
    noisy, clean = _class_sums(base, x)
    return _decide(noisy, clean)


def classify(model: FusedModel, x: FeatureVector) -> SqaDecision:
    """Fused decision for one feature vector."""
    if len(x.values) != model.sd.dimension:
        raise ValueError(
            f"feature dimension mismatch: expected {model.sd.dimension}, got {len(x.values)}"
        )
    sd_noisy, sd_clean = _class_sums(model.sd, x)
    si_noisy, si_clean = _class_sums(model.si, x)
    a = model.alpha
    b = 1.0 - model.alpha
    return _decide(a * sd_noisy + b * si_noisy, a * sd_clean + b * si_clean)


@dataclass(frozen=True)
class SweepRow:
    alpha: float
    subject_id: str
    mcc: float


@dataclass(frozen=True)
class SweepSummary:
    alpha: float
    mean_mcc: float
    std_mcc: float


@dataclass(frozen=True)
class SweepResult:
    rows: tuple[SweepRow, ...]
    summary: tuple[SweepSummary, ...]

    def best(self) -> SweepSummary:
        return max(self.summary, key=lambda s: (s.mean_mcc, -s.alpha))


def sweep_alpha(
    sd_models: Mapping[str, RuleBase],
    si_model: RuleBase,
    data: Mapping[str, tuple[Sequence[FeatureVector], Sequence[ClassLabel]]],
    grid: Sequence[float] = DEFAULT_ALPHA_GRID,
) -> SweepResult:
    """Per-subject MCC across the alpha grid, with mean and std per alpha.

    Subjects are evaluated in sorted id order so aggregation is
    order-independent and bit-stable.
    """
    for alpha in grid:
        if not 0.0 <= alpha <= 1.0:
            raise ValueError(f"grid value {alpha} outside [0, 1]")
    if not grid:
        raise ValueError("empty alpha grid")
    subjects = sorted(data)
    if not subjects:
        raise ValueError("no subject data supplied")
    for subject_id in subjects:
        if subject_id not in sd_models:
            raise ValueError(f"subject {subject_id!r} has no SD rule base")
        vectors, labels = data[subject_id]
        if not vectors or len(vectors) != len(labels):
            raise ValueError(f"subject {subject_id!r} has empty or mismatched data")

    rows = []
    summary = []
    for alpha in grid:
        mccs = []
        for subject_id in subjects:
            vectors, labels = data[subject_id]
            model = FusedModel(sd=sd_models[subject_id], si=si_model, alpha=alpha)
            predictions = [classify(model, x).predicted for x in vectors]
            mcc = report(confusion(predictions, labels)).mcc
            rows.append(SweepRow(alpha=alpha, subject_id=subject_id, mcc=mcc))
            mccs.append(mcc)
        mean = sum(mccs) / len(mccs)
        var = sum((v - mean) ** 2 for v in mccs) / len(mccs)
        summary.append(SweepSummary(alpha=alpha, mean_mcc=mean, std_mcc=math.sqrt(var)))
    return SweepResult(rows=tuple(rows), summary=tuple(summary))


def write_sweep_csv(result: SweepResult, rows_path, summary_path) -> None:
    """Emit the per-subject table and the plot-ready summary table."""
    with open(rows_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["alpha", "subject_id", "mcc"])
        for row in result.rows:
            writer.writerow([repr(row.alpha), row.subject_id, repr(row.mcc)])
    with open(summary_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["alpha", "mean_mcc", "std_mcc"])
        for s in result.summary:
            writer.writerow([repr(s.alpha), repr(s.mean_mcc), repr(s.std_mcc)])
