"""Shared fixtures: a small labelled study, trained models, random rule bases."""

import numpy as np
import pytest

from it2sqa import pipeline
from it2sqa.features import FEATURE_NAMES, FeatureVector
from it2sqa.fuzzy import FuzzyRule, RuleBase, build_partition
from it2sqa.learner import GaConfig, train_study
from it2sqa.signal import ClassLabel, build_synthetic_study


@pytest.fixture(scope="session")
def tiny_study():
    return build_synthetic_study(
        n_subjects=3, windows_per_subject=24, noisy_fraction=0.25,
        subject_shift=0.2, seed=11,
    )


@pytest.fixture(scope="session")
def tiny_train_data(tiny_study):
    return pipeline.split_features(tiny_study, "train")


@pytest.fixture(scope="session")
def tiny_val_data(tiny_study):
    return pipeline.split_features(tiny_study, "validation")


@pytest.fixture(scope="session")
def tiny_ga_config():
    return GaConfig(population_size=24, generations=15, seed=5)


@pytest.fixture(scope="session")
def trained_tiny(tiny_train_data, tiny_ga_config):
    return train_study(tiny_train_data, tiny_ga_config)


def make_random_rule_base(rng: np.random.Generator, origin: str) -> RuleBase:
    """A structurally valid rule base with random partitions, rules, weights."""
    n_terms = 3
    partitions = []
    for f in range(len(FEATURE_NAMES)):
        lo = float(rng.uniform(-2.0, 0.0))
        hi = lo + float(rng.uniform(0.5, 3.0))
        bps = np.sort(rng.uniform(lo, hi, size=n_terms - 1))
        partitions.append(build_partition(f, [float(b) for b in bps], lo, hi, degenerate=False))
    partitions = tuple(partitions)

    rules = []
    for _ in range(int(rng.integers(1, 11))):
        n_ants = int(rng.integers(1, 4))
        feats = sorted(int(f) for f in rng.choice(len(FEATURE_NAMES), n_ants, replace=False))
        antecedents = tuple((f, int(rng.integers(n_terms))) for f in feats)
        rules.append(
            FuzzyRule(
                antecedents=antecedents,
                consequent=ClassLabel.NOISY if rng.random() < 0.5 else ClassLabel.CLEAN,
                rw_lower=float(rng.uniform(0.0, 1.0)),
                rw_upper=float(rng.uniform(0.0, 1.0)),
            )
        )
    return RuleBase(rules=tuple(rules), origin=origin, partitions=partitions)


def random_vector(rng: np.random.Generator, base: RuleBase) -> FeatureVector:
    """A feature vector spread over (and a little beyond) the base's domains."""
    values = []
    for partition in base.partitions:
        lo, hi = partition.domain
        pad = 0.3 * (hi - lo)
        values.append(float(rng.uniform(lo - pad, hi + pad)))
    return FeatureVector(values=tuple(values), subject_id="rand", window_index=0)


@pytest.fixture
def rule_base_factory():
    return make_random_rule_base


@pytest.fixture
def vector_factory():
    return random_vector
