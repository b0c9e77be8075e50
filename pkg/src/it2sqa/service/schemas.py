"""Pydantic request and response models for the HTTP service."""

from __future__ import annotations

from pydantic import BaseModel, Field


class HealthResponse(BaseModel):
    status: str
    version: str


class StudyParams(BaseModel):
    n_subjects: int = Field(default=10, ge=1)
    windows_per_subject: int = Field(default=33, ge=2)
    noisy_fraction: float = Field(default=0.19, gt=0.0, lt=1.0)
    subject_shift: float = Field(default=0.25, ge=0.0)
    fs: float = Field(default=200.0, gt=0.0)
    window_seconds: float = Field(default=3.0, gt=0.0)
    seed: int = 7


class GaParams(BaseModel):
    population_size: int = Field(default=60, ge=2)
    generations: int = Field(default=100, ge=1)
    crossover_rate: float = Field(default=0.8, ge=0.0, le=1.0)
    mutation_rate: float = Field(default=0.1, ge=0.0, le=1.0)
    tournament_size: int = Field(default=3, ge=1)
    elite_count: int = Field(default=2, ge=0)
    seed: int = 0
    a_max: int = Field(default=3, ge=1, le=3)
    m_max: int = Field(default=10, ge=1, le=10)
    n_terms: int = Field(default=3, ge=2)


class SynthRequest(BaseModel):
    out_dir: str
    study: StudyParams = StudyParams()


class SynthResponse(BaseModel):
    corpus_path: str
    features_path: str
    manifest_path: str
    n_subjects: int
    n_windows: int
    n_noisy: int
    n_clean: int


class TrainRequest(BaseModel):
    corpus_path: str
    out_dir: str
    ga: GaParams = GaParams()
    fs: float = Field(default=200.0, gt=0.0)
    parallel: bool = False


class TrainResponse(BaseModel):
    si_model_path: str
    sd_model_paths: dict[str, str]
    skipped_subjects: dict[str, str]
    best_fitness_si: float
    manifest_path: str


class EvaluateRequest(BaseModel):
    models_dir: str
    corpus_path: str
    out_dir: str
    alpha: float = Field(default=0.7, ge=0.0, le=1.0)
    split: str = Field(default="validation", pattern="^(train|validation|test)$")
    fs: float = Field(default=200.0, gt=0.0)


class EvaluationRow(BaseModel):
    model_type: str
    alpha: float
    sensitivity_mean: float
    sensitivity_std: float
    specificity_mean: float
    specificity_std: float
    gmean_mean: float
    gmean_std: float
    mcc_mean: float
    mcc_std: float
    acc_mean: float
    acc_std: float


class EvaluateResponse(BaseModel):
    rows: list[EvaluationRow]
    report_path: str
    report_subjects_path: str
    manifest_path: str
    split: str
    subjects: list[str]


class SweepRequest(BaseModel):
    models_dir: str
    corpus_path: str
    out_dir: str
    grid: str = Field(default="0:0.1:1", description="alpha grid as a:step:b")
    split: str = Field(default="validation", pattern="^(train|validation|test)$")
    fs: float = Field(default=200.0, gt=0.0)


class SweepPoint(BaseModel):
    alpha: float
    mean_mcc: float
    std_mcc: float


class SweepResponse(BaseModel):
    summary: list[SweepPoint]
    best_alpha: float
    best_mean_mcc: float
    sweep_subjects_path: str
    sweep_summary_path: str
    manifest_path: str
    split: str


class WindowPayload(BaseModel):
    samples: list[float] = Field(min_length=8)
    fs: float = Field(default=200.0, gt=0.0)


class ClassifyRequest(BaseModel):
    sd_model_path: str
    si_model_path: str
    alpha: float = Field(default=0.7, ge=0.0, le=1.0)
    windows: list[WindowPayload] = Field(min_length=1)


class WindowDecision(BaseModel):
    predicted: str
    score_noisy: float
    score_clean: float
    sqi: float


class ClassifyResponse(BaseModel):
    decisions: list[WindowDecision]
    alpha: float
