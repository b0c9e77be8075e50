"""Confusion-matrix statistics for fitness, validation and reporting.

The positive class defaults to Noisy: the scarce class is the detection
target. Every metric takes the zero-denominator convention (value 0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .signal import ClassLabel


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self):
        for name in ("tp", "fp", "tn", "fn"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass(frozen=True)
class MetricReport:
    sensitivity: float
    specificity: float
    gmean: float
    mcc: float
    acc: float


@dataclass(frozen=True)
class AggregateReport:
    """Unweighted per-subject mean and population standard deviation."""

    mean: MetricReport
    std: MetricReport
    n: int


def confusion(
    predictions: Sequence[ClassLabel],
    labels: Sequence[ClassLabel],
    positive: ClassLabel = ClassLabel.NOISY,
) -> ConfusionMatrix:
    if len(predictions) != len(labels):
        raise ValueError(
            f"length mismatch: {len(predictions)} predictions vs {len(labels)} labels"
        )
    if not labels:
        raise ValueError("cannot build a confusion matrix from zero windows")
    tp = fp = tn = fn = 0
    for pred, truth in zip(predictions, labels):
        if truth == positive:
            if pred == positive:
                tp += 1
            else:
                fn += 1
        else:
            if pred == positive:
                fp += 1
            else:
                tn += 1
    return ConfusionMatrix(tp=tp, fp=fp, tn=tn, fn=fn)


def report(cm: ConfusionMatrix) -> MetricReport:
    """Sensitivity, specificity, Gmean, MCC and accuracy from one matrix."""
    if cm.total == 0:
        raise ValueError("empty confusion matrix")
    sensitivity = cm.tp / (cm.tp + cm.fn) if cm.tp + cm.fn else 0.0
    specificity = cm.tn / (cm.tn + cm.fp) if cm.tn + cm.fp else 0.0
    gmean = math.sqrt(sensitivity * specificity)
    acc = (cm.tp + cm.tn) / cm.total
    denom = (cm.tp + cm.fp) * (cm.tp + cm.fn) * (cm.tn + cm.fp) * (cm.tn + cm.fn)
    mcc = (cm.tp * cm.tn - cm.fp * cm.fn) / math.sqrt(denom) if denom else 0.0
    return MetricReport(
        sensitivity=sensitivity, specificity=specificity, gmean=gmean, mcc=mcc, acc=acc
    )


def aggregate(reports: Sequence[MetricReport]) -> AggregateReport:
    """Mean and population std per metric, one vote per subject."""
    if not reports:
        raise ValueError("no reports to aggregate")
    n = len(reports)

    def stats(values: list[float]) -> tuple[float, float]:
        mean = sum(values) / n
        var = sum((v - mean) ** 2 for v in values) / n
        return mean, math.sqrt(var)

    fields = ("sensitivity", "specificity", "gmean", "mcc", "acc")
    means = {}
    stds = {}
    for name in fields:
        means[name], stds[name] = stats([getattr(r, name) for r in reports])
    return AggregateReport(mean=MetricReport(**means), std=MetricReport(**stds), n=n)
