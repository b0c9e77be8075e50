"""Genetic rule-base learning under cross-validated MCC fitness.

Pittsburgh encoding: one chromosome is a whole candidate rule base, each
gene one rule (a term index per feature, -1 for unused, plus a consequent).
Fitness refits partitions and rule weights inside every fold on the fold's
training portion only and averages the held-out MCCs, so no information
leaks between folds.
"""

from __future__ import annotations

import csv
import hashlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields, replace
from typing import Sequence

import numpy as np

from .errors import ConfigError
from .features import FEATURE_NAMES, FeatureVector, fit_feature_stats
from .fuzzy import (
    A_MAX,
    M_MAX,
    FuzzyRule,
    RuleBase,
    build_partitions,
    fit_all_rule_weights,
    membership,
)
from .metrics import ConfusionMatrix, report
from .signal import ClassLabel

CLASS_ORDER = (ClassLabel.NOISY, ClassLabel.CLEAN)


@dataclass(frozen=True)
class GaConfig:
    population_size: int = 60
    generations: int = 100
    crossover_rate: float = 0.8
    mutation_rate: float = 0.1
    tournament_size: int = 3
    elite_count: int = 2
    seed: int = 0
    a_max: int = 3
    m_max: int = 10
    n_terms: int = 3

    def __post_init__(self):
        if self.population_size < 2:
            raise ValueError("population_size must be >= 2")
        if self.generations < 1:
            raise ValueError("generations must be >= 1")
        for name in ("crossover_rate", "mutation_rate"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.tournament_size < 1:
            raise ValueError("tournament_size must be >= 1")
        if not 0 <= self.elite_count < self.population_size:
            raise ValueError("elite_count must be < population_size")
        if not 1 <= self.a_max <= A_MAX:
            raise ValueError(f"a_max must lie in [1, {A_MAX}]")
        if not 1 <= self.m_max <= M_MAX:
            raise ValueError(f"m_max must lie in [1, {M_MAX}]")
        if self.n_terms < 2:
            raise ValueError("n_terms must be >= 2")

    @classmethod
    def from_mapping(cls, mapping: dict) -> "GaConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(mapping) - known)
        if unknown:
            raise ConfigError(f"unknown ga config keys: {', '.join(unknown)}")
        try:
            return cls(**mapping)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad ga config: {exc}") from exc


@dataclass(frozen=True)
class Gene:
    """One rule: a term index per feature (-1 = unused) and a consequent."""

    terms: tuple[int, ...]
    consequent: int

    def antecedents(self) -> tuple[tuple[int, int], ...]:
        return tuple((f, t) for f, t in enumerate(self.terms) if t >= 0)


Genome = tuple[Gene, ...]


@dataclass(frozen=True)
class CvPlan:
    """Stratified fold assignment over the training windows."""

    k: int
    folds: tuple[int, ...]

    def __post_init__(self):
        if self.k not in (3, 5):
            raise ValueError(f"k must be 3 or 5, got {self.k}")
        if any(not 0 <= f < self.k for f in self.folds):
            raise ValueError("fold assignments out of range")
        if len(set(self.folds)) != self.k:
            raise ValueError("every fold must receive at least one window")


def choose_k(train_labels: Sequence[ClassLabel]) -> int:
    """Pick the fold count from the minority-class headcount."""
    if not train_labels:
        raise ValueError("empty label sequence")
    n_noisy = sum(1 for lab in train_labels if lab is ClassLabel.NOISY)
    n_clean = len(train_labels) - n_noisy
    minority = min(n_noisy, n_clean)
    if minority < 3:
        raise ValueError(
            f"minority class too small to stratify: {n_noisy} noisy / {n_clean} clean "
            "(need at least 3 of each)"
        )
    return 5 if minority >= 15 else 3


def make_cv_plan(labels: Sequence[ClassLabel], k: int, seed: int) -> CvPlan:
    """Deal shuffled per-class indices round-robin into k disjoint folds."""
    rng = np.random.default_rng(np.random.SeedSequence((seed, 0xCF)))
    folds = [0] * len(labels)
    for cls in CLASS_ORDER:
        idx = [i for i, lab in enumerate(labels) if lab is cls]
        order = rng.permutation(len(idx))
        for j, pos in enumerate(order):
            folds[idx[int(pos)]] = j % k
    return CvPlan(k=k, folds=tuple(folds))


# ---------------------------------------------------------------------------
# Fitness
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class _Fold:
    partitions: tuple
    mem_lower_train: np.ndarray  # (n_train, d, n_terms)
    mem_upper_train: np.ndarray
    mem_lower_val: np.ndarray
    mem_upper_val: np.ndarray
    noisy_train: np.ndarray  # bool
    noisy_val: np.ndarray
    train_checksum: str
    train_indices: tuple[int, ...]
    val_indices: tuple[int, ...]


def _membership_cache(X: np.ndarray, partitions) -> tuple[np.ndarray, np.ndarray]:
    n, d = X.shape
    n_terms = len(partitions[0].terms)
    lower = np.empty((n, d, n_terms))
    upper = np.empty((n, d, n_terms))
    for i in range(n):
        for f in range(d):
            x = X[i, f]
            for t, mf in enumerate(partitions[f].terms):
                lo, up = membership(mf, x)
                lower[i, f, t] = lo
                upper[i, f, t] = up
    return lower, upper


class FitnessContext:
    """Per-fold fitted partitions and membership caches for fast evaluation.

    Partitions depend only on the fold's training vectors, never on the
    chromosome, so they are fitted once. `fold_checksums` exposes a sha256
    over each fold's training feature bytes for leakage audits.
    """

    def __init__(
        self,
        vectors: Sequence[FeatureVector],
        labels: Sequence[ClassLabel],
        plan: CvPlan,
        n_terms: int,
    ):
        if len(vectors) != len(labels) or not vectors:
            raise ValueError("vectors and labels must be equal-length and non-empty")
        if len(plan.folds) != len(vectors):
            raise ValueError("plan does not match the training set size")
        X = np.array([v.values for v in vectors], dtype=float)
        noisy = np.array([lab is ClassLabel.NOISY for lab in labels], dtype=bool)
        self.n_samples, self.n_features = X.shape
        self.n_terms = n_terms

        folds = []
        fold_arr = np.array(plan.folds)
        for f in range(plan.k):
            val_idx = np.flatnonzero(fold_arr == f)
            train_idx = np.flatnonzero(fold_arr != f)
            stats = fit_feature_stats([vectors[i] for i in train_idx], n_terms)
            partitions = build_partitions(stats)
            mem_lo_tr, mem_up_tr = _membership_cache(X[train_idx], partitions)
            mem_lo_va, mem_up_va = _membership_cache(X[val_idx], partitions)
            folds.append(
                _Fold(
                    partitions=partitions,
                    mem_lower_train=mem_lo_tr,
                    mem_upper_train=mem_up_tr,
                    mem_lower_val=mem_lo_va,
                    mem_upper_val=mem_up_va,
                    noisy_train=noisy[train_idx],
                    noisy_val=noisy[val_idx],
                    train_checksum=hashlib.sha256(X[train_idx].tobytes()).hexdigest(),
                    train_indices=tuple(int(i) for i in train_idx),
                    val_indices=tuple(int(i) for i in val_idx),
                )
            )
        self.folds = folds

    @property
    def fold_checksums(self) -> list[str]:
        return [fold.train_checksum for fold in self.folds]

    def fold_mccs(self, genome: Genome) -> list[float]:
        """Held-out MCC per fold for one chromosome, in fold-index order."""
        mccs = []
        for fold in self.folds:
            score_noisy = np.zeros(len(fold.noisy_val))
            score_clean = np.zeros(len(fold.noisy_val))
            for gene in genome:
                ants = gene.antecedents()
                s_lo_tr = fold.mem_lower_train[:, ants[0][0], ants[0][1]].copy()
                s_up_tr = fold.mem_upper_train[:, ants[0][0], ants[0][1]].copy()
                s_lo_va = fold.mem_lower_val[:, ants[0][0], ants[0][1]].copy()
                s_up_va = fold.mem_upper_val[:, ants[0][0], ants[0][1]].copy()
                for f, t in ants[1:]:
                    s_lo_tr *= fold.mem_lower_train[:, f, t]
                    s_up_tr *= fold.mem_upper_train[:, f, t]
                    s_lo_va *= fold.mem_lower_val[:, f, t]
                    s_up_va *= fold.mem_upper_val[:, f, t]
                match = fold.noisy_train if gene.consequent == 0 else ~fold.noisy_train
                total_lo = float(np.sum(s_lo_tr))
                total_up = float(np.sum(s_up_tr))
                rw_lo = float(np.sum(s_lo_tr[match])) / total_lo if total_lo > 0.0 else 0.0
                rw_up = float(np.sum(s_up_tr[match])) / total_up if total_up > 0.0 else 0.0
                overall = 0.5 * (s_lo_va * rw_lo + s_up_va * rw_up)
                if gene.consequent == 0:
                    score_noisy += overall
                else:
                    score_clean += overall
            pred_noisy = ~(score_clean > score_noisy)
            tp = int(np.sum(pred_noisy & fold.noisy_val))
            fp = int(np.sum(pred_noisy & ~fold.noisy_val))
            fn = int(np.sum(~pred_noisy & fold.noisy_val))
            tn = int(np.sum(~pred_noisy & ~fold.noisy_val))
            mccs.append(report(ConfusionMatrix(tp=tp, fp=fp, tn=tn, fn=fn)).mcc)
        return mccs

    def evaluate(self, genome: Genome) -> float:
        mccs = self.fold_mccs(genome)
        return sum(mccs) / len(mccs)


def fitness(
    genome: Genome,
    vectors: Sequence[FeatureVector],
    labels: Sequence[ClassLabel],
    plan: CvPlan,
    n_terms: int = 3,
) -> float:
    """Mean held-out MCC over the plan's folds for one chromosome."""
    return FitnessContext(vectors, labels, plan, n_terms).evaluate(genome)


# ---------------------------------------------------------------------------
# Genetic operators
# ---------------------------------------------------------------------------

def repair(genome: Sequence[Gene], n_features: int, n_terms: int, a_max: int, m_max: int) -> Genome:
    """Deterministically coerce any genome into a valid rule list.

    Clamps term indices, trims antecedents past a_max, guarantees at least
    one antecedent per rule, drops duplicate antecedent sets (contradictory
    duplicates included, first wins), and truncates to m_max rules.
    """
    seen = set()
    out: list[Gene] = []
    for gene in genome:
        terms = list(gene.terms[:n_features]) + [-1] * max(0, n_features - len(gene.terms))
        terms = [t if 0 <= t < n_terms else -1 for t in terms]
        used = [f for f, t in enumerate(terms) if t >= 0]
        for f in used[a_max:]:
            terms[f] = -1
        if not any(t >= 0 for t in terms):
            terms[0] = 0
        consequent = gene.consequent & 1
        key = tuple(terms)
        if key in seen:
            continue
        seen.add(key)
        out.append(Gene(terms=tuple(terms), consequent=consequent))
        if len(out) == m_max:
            break
    if not out:
        out = [Gene(terms=(0,) + (-1,) * (n_features - 1), consequent=0)]
    return tuple(out)


def random_genome(
    rng: np.random.Generator, n_features: int, n_terms: int, a_max: int, m_max: int
) -> Genome:
    n_rules = int(rng.integers(1, m_max + 1))
    genes = []
    for _ in range(n_rules):
        n_ants = int(rng.integers(1, a_max + 1))
        feats = rng.choice(n_features, size=n_ants, replace=False)
        terms = [-1] * n_features
        for f in feats:
            terms[int(f)] = int(rng.integers(n_terms))
        genes.append(Gene(terms=tuple(terms), consequent=int(rng.integers(2))))
    return tuple(genes)


def _mutate(genome: Genome, rng: np.random.Generator, rate: float, n_terms: int) -> Genome:
    genes = []
    for gene in genome:
        terms = list(gene.terms)
        for f in range(len(terms)):
            if rng.random() < rate:
                if terms[f] >= 0:
                    if rng.random() < 0.5:
                        terms[f] = -1
                    else:
                        terms[f] = int(rng.integers(n_terms))
                else:
                    terms[f] = int(rng.integers(n_terms))
        consequent = gene.consequent
        if rng.random() < rate:
            consequent = 1 - consequent
        genes.append(Gene(terms=tuple(terms), consequent=consequent))
    return tuple(genes)


def _crossover(a: Genome, b: Genome, rng: np.random.Generator) -> Genome:
    cut_a = int(rng.integers(0, len(a) + 1))
    cut_b = int(rng.integers(0, len(b) + 1))
    return a[:cut_a] + b[cut_b:]


def _tournament(rng: np.random.Generator, fits: Sequence[float], size: int) -> int:
    candidates = rng.integers(0, len(fits), size=size)
    return min((int(i) for i in candidates), key=lambda i: (-fits[i], i))


def decode(genome: Genome, consequent_order=CLASS_ORDER) -> list[FuzzyRule]:
    return [
        FuzzyRule(antecedents=gene.antecedents(), consequent=consequent_order[gene.consequent])
        for gene in genome
    ]


@dataclass(frozen=True)
class GenerationStat:
    generation: int
    best_fitness: float
    mean_fitness: float


@dataclass(frozen=True)
class EvolveResult:
    rule_base: RuleBase
    history: tuple[GenerationStat, ...]
    plan: CvPlan
    best_fitness: float
    fold_checksums: tuple[str, ...]


def evolve(
    vectors: Sequence[FeatureVector],
    labels: Sequence[ClassLabel],
    config: GaConfig,
    origin: str,
    parallel: bool = False,
) -> EvolveResult:
    """Evolve one rule base on a training split.

    Deterministic for a fixed config seed: every child's random stream is
    pre-split from the master seed, and fitness is a pure function of the
    chromosome, so serial and parallel evaluation yield identical results.
    """
    k = choose_k(labels)
    plan = make_cv_plan(labels, k, config.seed)
    ctx = FitnessContext(vectors, labels, plan, config.n_terms)
    d = ctx.n_features

    root = np.random.SeedSequence(config.seed)
    init_ss, *gen_ss = root.spawn(config.generations + 1)
    init_rng = np.random.default_rng(init_ss)
    population = [
        repair(
            random_genome(init_rng, d, config.n_terms, config.a_max, config.m_max),
            d, config.n_terms, config.a_max, config.m_max,
        )
        for _ in range(config.population_size)
    ]

    cache: dict[Genome, float] = {}

    def evaluate_all(pop: list[Genome]) -> list[float]:
        missing = [g for g in pop if g not in cache]
        unique = list(dict.fromkeys(missing))
        if unique:
            if parallel:
                with ThreadPoolExecutor(max_workers=4) as pool:
                    values = list(pool.map(ctx.evaluate, unique))
            else:
                values = [ctx.evaluate(g) for g in unique]
            cache.update(zip(unique, values))
        return [cache[g] for g in pop]

    best_genome: Genome | None = None
    best_fitness = -np.inf
    history = []
    for generation in range(config.generations):
        fits = evaluate_all(population)
        gen_best = max(range(len(fits)), key=lambda i: (fits[i], -i))
        if fits[gen_best] > best_fitness:
            best_fitness = fits[gen_best]
            best_genome = population[gen_best]
        history.append(
            GenerationStat(
                generation=generation,
                best_fitness=best_fitness,
                mean_fitness=sum(fits) / len(fits),
            )
        )
        if generation == config.generations - 1:
            break

        order = sorted(range(len(population)), key=lambda i: (-fits[i], i))
        elites = [population[i] for i in order[: config.elite_count]]
        children = list(elites)
        for child_ss in gen_ss[generation].spawn(config.population_size - config.elite_count):
            rng = np.random.default_rng(child_ss)
            p1 = population[_tournament(rng, fits, config.tournament_size)]
            p2 = population[_tournament(rng, fits, config.tournament_size)]
            if rng.random() < config.crossover_rate:
                child = _crossover(p1, p2, rng)
            else:
                child = p1
            child = _mutate(child, rng, config.mutation_rate, config.n_terms)
            children.append(repair(child, d, config.n_terms, config.a_max, config.m_max))
        population = children

    assert best_genome is not None
    stats = fit_feature_stats(vectors, config.n_terms)
    partitions = build_partitions(stats)
    rules = fit_all_rule_weights(decode(best_genome), vectors, labels, partitions)
    base = RuleBase(
        rules=rules, origin=origin, partitions=partitions, feature_names=FEATURE_NAMES
    )
    return EvolveResult(
        rule_base=base,
        history=tuple(history),
        plan=plan,
        best_fitness=best_fitness,
        fold_checksums=tuple(ctx.fold_checksums),
    )


# ---------------------------------------------------------------------------
# Study-level training
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TrainStudyResult:
    si: EvolveResult
    sd: dict[str, EvolveResult]
    failures: dict[str, str]
    si_train_size: int
    sd_train_sizes: dict[str, int]


def derive_seed(master: int, tag: str) -> int:
    """Stable per-model seed from the master seed and a model tag."""
    digest = hashlib.sha256(f"{master}:{tag}".encode()).digest()
    return int.from_bytes(digest[:8], "big") >> 1


def train_study(
    per_subject: dict[str, tuple[Sequence[FeatureVector], Sequence[ClassLabel]]],
    config: GaConfig,
    parallel: bool = False,
) -> TrainStudyResult:
    """Train one SI base on the pooled data and one SD base per subject.

    Subjects whose training split cannot be stratified are reported in
    `failures`; SI training proceeds on the full pool regardless.
    """
    if not per_subject:
        raise ValueError("no subjects to train on")
    subjects = sorted(per_subject)
    pooled_vectors: list[FeatureVector] = []
    pooled_labels: list[ClassLabel] = []
    for subject_id in subjects:
        vectors, labels = per_subject[subject_id]
        pooled_vectors.extend(vectors)
        pooled_labels.extend(labels)

    si_config = replace(config, seed=derive_seed(config.seed, "SI"))
    si_result = evolve(pooled_vectors, pooled_labels, si_config, origin="SI", parallel=parallel)

    sd: dict[str, EvolveResult] = {}
    failures: dict[str, str] = {}
    for subject_id in subjects:
        vectors, labels = per_subject[subject_id]
        sd_config = replace(config, seed=derive_seed(config.seed, f"SD:{subject_id}"))
        try:
            sd[subject_id] = evolve(vectors, labels, sd_config, origin="SD", parallel=parallel)
        except ValueError as exc:
            failures[subject_id] = str(exc)
    return TrainStudyResult(
        si=si_result,
        sd=sd,
        failures=failures,
        si_train_size=len(pooled_vectors),
        sd_train_sizes={s: len(per_subject[s][0]) for s in subjects},
    )


def write_training_log(history: Sequence[GenerationStat], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["generation", "best_fitness", "mean_fitness"])
        for stat in history:
            writer.writerow([stat.generation, repr(stat.best_fitness), repr(stat.mean_fitness)])
