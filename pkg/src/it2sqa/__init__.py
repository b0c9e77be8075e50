"""Personalised, adjustable PPG signal-quality assessment.

Two interval type-2 fuzzy rule bases (a per-subject one and a global one)
are learned by a genetic algorithm under cross-validated MCC fitness and
blended at inference time by a personalisation score alpha.
"""

__version__ = "0.1.0"
