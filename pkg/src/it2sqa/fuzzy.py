"""Interval type-2 fuzzy sets, rules, and the per-rule inference pipeline.

Membership degrees are intervals [lower, upper] bounded by two triangles
sharing an apex abscissa. A rule's firing strength is the product t-norm of
its antecedent memberships per bound; scaling each bound by the matching
certainty-factor rule weight gives the rule's association degree, whose
midpoint is the evidence the rule contributes to its consequent class.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import Sequence

from .errors import ValidationError
from .features import FEATURE_NAMES, FeatureStats, FeatureVector
from .signal import ClassLabel

A_MAX = 3
M_MAX = 10

FOU_WIDEN = 0.15
LOWER_APEX_HEIGHT = 0.8

MODEL_FORMAT_VERSION = 1


@dataclass(frozen=True)
class IT2TriangularMf:
    """Footprint of uncertainty between two triangles with a shared apex.

    The upper triangle has apex height 1; the lower one height in (0, 1].
    Feet satisfy upper_left <= lower_left <= apex <= lower_right <= upper_right,
    which makes lower(x) <= upper(x) hold everywhere by construction.
    """

    upper_left: float
    lower_left: float
    apex: float
    lower_right: float
    upper_right: float
    lower_height: float = LOWER_APEX_HEIGHT

    def __post_init__(self):
        if not self.upper_left <= self.lower_left <= self.apex <= self.lower_right <= self.upper_right:
            raise ValueError(
                "feet must satisfy upper_left <= lower_left <= apex <= lower_right <= upper_right"
            )
        if not 0.0 < self.lower_height <= 1.0:
            raise ValueError(f"lower_height must lie in (0, 1], got {self.lower_height}")


def _triangle(x: float, left: float, apex: float, right: float, height: float) -> float:
    if x == apex:
        return height
    if x <= left or x >= right:
        return 0.0
    if x < apex:
        return height * (x - left) / (apex - left)
    return height * (right - x) / (right - apex)


def membership(mf: IT2TriangularMf, x: float) -> tuple[float, float]:
    """Interval membership of x: (lower bound, upper bound)."""
    lower = _triangle(x, mf.lower_left, mf.apex, mf.lower_right, mf.lower_height)
    upper = _triangle(x, mf.upper_left, mf.apex, mf.upper_right, 1.0)
    return lower, upper


@dataclass(frozen=True)
class LinguisticPartition:
    """Ordered terms covering one feature's training range."""

    feature_index: int
    terms: tuple[IT2TriangularMf, ...]
    domain: tuple[float, float]

    def __post_init__(self):
        if len(self.terms) < 2:
            raise ValueError("a partition needs at least 2 terms")
        apexes = [t.apex for t in self.terms]
        if any(b <= a for a, b in zip(apexes, apexes[1:])):
            raise ValueError("term apexes must be strictly increasing")


def build_partition(
    feature_index: int,
    breakpoints: Sequence[float],
    lo: float,
    hi: float,
    degenerate: bool,
    fou_widen: float = FOU_WIDEN,
    lower_height: float = LOWER_APEX_HEIGHT,
) -> LinguisticPartition:
    """Build one partition from quantile breakpoints.

    Prototype triangles take their apexes at the quantile-bin centers with
    feet at the neighbouring apexes (domain edges for the outermost terms).
    The upper triangle widens each foot by `fou_widen` of the local support;
    the lower one keeps the prototype feet at reduced apex height.
    """
    n_terms = len(breakpoints) + 1
    if degenerate or hi <= lo:
        pad = max(abs(lo) * 0.05, 1e-6)
        if hi <= lo:
            lo, hi = lo - pad, hi + pad
        span = hi - lo
        centers = [lo + (2 * j + 1) / (2 * n_terms) * span for j in range(n_terms)]
    else:
        anchors = [lo, *breakpoints, hi]
        centers = [(anchors[j] + anchors[j + 1]) / 2.0 for j in range(n_terms)]
        min_gap = (hi - lo) * 1e-9
        if any(c2 - c1 <= min_gap for c1, c2 in zip(centers, centers[1:])):
            span = hi - lo
            centers = [lo + (2 * j + 1) / (2 * n_terms) * span for j in range(n_terms)]

    terms = []
    for j, center in enumerate(centers):
        left = centers[j - 1] if j > 0 else min(lo, center)
        right = centers[j + 1] if j < n_terms - 1 else max(hi, center)
        support = right - left
        terms.append(
            IT2TriangularMf(
                upper_left=left - fou_widen * support,
                lower_left=left,
                apex=center,
                lower_right=right,
                upper_right=right + fou_widen * support,
                lower_height=lower_height,
            )
        )
    return LinguisticPartition(feature_index=feature_index, terms=tuple(terms), domain=(lo, hi))


def build_partitions(stats: FeatureStats, **kwargs) -> tuple[LinguisticPartition, ...]:
    return tuple(
        build_partition(
            f,
            stats.breakpoints[f],
            stats.minima[f],
            stats.maxima[f],
            stats.degenerate[f],
            **kwargs,
        )
        for f in range(len(stats.breakpoints))
    )


@dataclass(frozen=True)
class FuzzyRule:
    """Weighted antecedent-consequent rule over linguistic terms."""

    antecedents: tuple[tuple[int, int], ...]
    consequent: ClassLabel
    rw_lower: float = 0.0
    rw_upper: float = 0.0

    def __post_init__(self):
        if not 1 <= len(self.antecedents) <= A_MAX:
            raise ValueError(f"rule must have 1..{A_MAX} antecedents, got {len(self.antecedents)}")
        feats = [f for f, _ in self.antecedents]
        if len(set(feats)) != len(feats):
            raise ValueError("a feature may appear at most once per rule")
        for rw in (self.rw_lower, self.rw_upper):
            if not 0.0 <= rw <= 1.0:
                raise ValueError(f"rule weights must lie in [0, 1], got {rw}")


@dataclass(frozen=True)
class RuleBase:
    """A fitted rule set tagged with its origin (SD or SI)."""

    rules: tuple[FuzzyRule, ...]
    origin: str
    partitions: tuple[LinguisticPartition, ...]
    feature_names: tuple[str, ...] = FEATURE_NAMES

    def __post_init__(self):
        if self.origin not in ("SD", "SI"):
            raise ValueError(f"origin must be 'SD' or 'SI', got {self.origin!r}")
        if not 1 <= len(self.rules) <= M_MAX:
            raise ValueError(f"rule base must hold 1..{M_MAX} rules, got {len(self.rules)}")
        if len(self.partitions) != len(self.feature_names):
            raise ValueError("one partition per feature required")
        n_terms = [len(p.terms) for p in self.partitions]
        for rule in self.rules:
            for f, t in rule.antecedents:
                if not 0 <= f < len(self.partitions) or not 0 <= t < n_terms[f]:
                    raise ValueError(f"antecedent ({f}, {t}) out of range")

    @property
    def dimension(self) -> int:
        return len(self.feature_names)


@dataclass(frozen=True)
class AssociationDegree:
    """Interval evidence one rule contributes, plus its midpoint."""

    lower: float
    upper: float
    overall: float

    def __post_init__(self):
        if self.lower > self.upper:
            raise ValueError("association degree interval endpoints out of order")


def firing_strength(
    rule: FuzzyRule, x: FeatureVector, partitions: Sequence[LinguisticPartition]
) -> tuple[float, float]:
    """Product t-norm of the rule's antecedent memberships, per bound."""
    lower = 1.0
    upper = 1.0
    for f, t in rule.antecedents:
        lo, up = membership(partitions[f].terms[t], x.values[f])
        lower *= lo
        upper *= up
    return lower, upper


def certainty_factor(match_sum: float, total_sum: float) -> float:
    """Confidence ratio with the zero-denominator convention."""
    if total_sum <= 0.0:
        return 0.0
    return match_sum / total_sum


def fit_rule_weights(
    rule: FuzzyRule,
    vectors: Sequence[FeatureVector],
    labels: Sequence[ClassLabel],
    partitions: Sequence[LinguisticPartition],
) -> tuple[float, float]:
    """Certainty-factor rule weights per bound over labelled training data."""
    if not vectors or len(vectors) != len(labels):
        raise ValueError("vectors and labels must be equal-length and non-empty")
    match_lower = total_lower = 0.0
    match_upper = total_upper = 0.0
    for x, label in zip(vectors, labels):
        s_lo, s_up = firing_strength(rule, x, partitions)
        total_lower += s_lo
        total_upper += s_up
        if label is rule.consequent:
            match_lower += s_lo
            match_upper += s_up
    return certainty_factor(match_lower, total_lower), certainty_factor(match_upper, total_upper)


def association_degree(
    rule: FuzzyRule, x: FeatureVector, partitions: Sequence[LinguisticPartition]
) -> AssociationDegree:
    """Firing strength scaled by the rule weights, per bound.

    The two scaled bounds are reported as a sorted interval; certainty
    factors for the lower and upper memberships are fitted independently,
    so their products can arrive out of order.
    """
    s_lo, s_up = firing_strength(rule, x, partitions)
    scaled_lo = s_lo * rule.rw_lower
    scaled_up = s_up * rule.rw_upper
    lower = min(scaled_lo, scaled_up)
    upper = max(scaled_lo, scaled_up)
    return AssociationDegree(lower=lower, upper=upper, overall=(scaled_lo + scaled_up) / 2.0)


def fit_all_rule_weights(
    rules: Sequence[FuzzyRule],
    vectors: Sequence[FeatureVector],
    labels: Sequence[ClassLabel],
    partitions: Sequence[LinguisticPartition],
) -> tuple[FuzzyRule, ...]:
    fitted = []
    for rule in rules:
        rw_lower, rw_upper = fit_rule_weights(rule, vectors, labels, partitions)
        fitted.append(replace(rule, rw_lower=rw_lower, rw_upper=rw_upper))
    return tuple(fitted)


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def _mf_to_doc(mf: IT2TriangularMf) -> dict:
    return {
        "upper_left": mf.upper_left,
        "lower_left": mf.lower_left,
        "apex": mf.apex,
        "lower_right": mf.lower_right,
        "upper_right": mf.upper_right,
        "lower_height": mf.lower_height,
    }


def to_document(base: RuleBase, subject_id: str | None = None) -> dict:
    """Serialize a rule base to a JSON-compatible document.

    Floats survive the JSON round trip bit-exactly (shortest-repr encoding).
    """
    return {
        "format_version": MODEL_FORMAT_VERSION,
        "origin": base.origin,
        "subject_id": subject_id,
        "feature_names": list(base.feature_names),
        "partitions": [
            {
                "feature_index": p.feature_index,
                "domain": list(p.domain),
                "terms": [_mf_to_doc(t) for t in p.terms],
            }
            for p in base.partitions
        ],
        "rules": [
            {
                "antecedents": [list(a) for a in rule.antecedents],
                "consequent": rule.consequent.value,
                "rw_lower": rule.rw_lower,
                "rw_upper": rule.rw_upper,
            }
            for rule in base.rules
        ],
    }


def from_document(doc: dict) -> tuple[RuleBase, str | None]:
    """Rebuild a rule base (and its optional subject id) from a document."""
    try:
        version = doc["format_version"]
        if version != MODEL_FORMAT_VERSION:
            raise ValidationError(f"unsupported model format version {version!r}")
        partitions = tuple(
            LinguisticPartition(
                feature_index=int(p["feature_index"]),
                terms=tuple(IT2TriangularMf(**t) for t in p["terms"]),
                domain=(float(p["domain"][0]), float(p["domain"][1])),
            )
            for p in doc["partitions"]
        )
        rules = tuple(
            FuzzyRule(
                antecedents=tuple((int(f), int(t)) for f, t in r["antecedents"]),
                consequent=ClassLabel(r["consequent"]),
                rw_lower=float(r["rw_lower"]),
                rw_upper=float(r["rw_upper"]),
            )
            for r in doc["rules"]
        )
        base = RuleBase(
            rules=rules,
            origin=doc["origin"],
            partitions=partitions,
            feature_names=tuple(doc["feature_names"]),
        )
        return base, doc.get("subject_id")
    except ValidationError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"bad model document: {exc}") from exc


def save_model(base: RuleBase, path, subject_id: str | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(to_document(base, subject_id), fh, indent=2)
        fh.write("\n")


def load_model(path) -> tuple[RuleBase, str | None]:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"bad model file {path}: {exc}") from exc
    return from_document(doc)
