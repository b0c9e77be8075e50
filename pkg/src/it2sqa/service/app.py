"""FastAPI application exposing the pipeline and the fused classifier."""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from .. import __version__, pipeline
from ..errors import PipelineError, ValidationError
from ..features import extract_features
from ..fusion import FusedModel, classify
from ..fuzzy import load_model
from ..learner import GaConfig
from ..signal import PpgWindow, StudyConfig
from . import schemas

app = FastAPI(
    title="it2sqa",
    description="Personalised, adjustable PPG signal-quality assessment.",
    version=__version__,
)


def _run(fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except ValidationError as exc:
        raise HTTPException(status_code=400, detail=str(exc))
    except PipelineError as exc:
        raise HTTPException(status_code=500, detail=str(exc))


@app.get("/health", response_model=schemas.HealthResponse)
def health() -> schemas.HealthResponse:
    return schemas.HealthResponse(status="ok", version=__version__)


@app.post("/synth", response_model=schemas.SynthResponse)
def synth(request: schemas.SynthRequest) -> schemas.SynthResponse:
    config = pipeline.RunConfig(study=StudyConfig(**request.study.model_dump()))
    result = _run(pipeline.run_synth, config, request.out_dir)
    return schemas.SynthResponse(**result)


@app.post("/train", response_model=schemas.TrainResponse)
def train(request: schemas.TrainRequest) -> schemas.TrainResponse:
    config = pipeline.RunConfig(
        study=StudyConfig(fs=request.fs),
        ga=GaConfig(**request.ga.model_dump()),
    )
    result = _run(
        pipeline.run_train,
        request.corpus_path,
        config,
        request.out_dir,
        parallel=request.parallel,
    )
    return schemas.TrainResponse(**result)


@app.post("/evaluate", response_model=schemas.EvaluateResponse)
def evaluate(request: schemas.EvaluateRequest) -> schemas.EvaluateResponse:
    result = _run(
        pipeline.run_evaluate,
        request.models_dir,
        request.corpus_path,
        request.alpha,
        request.split,
        request.out_dir,
        fs=request.fs,
    )
    return schemas.EvaluateResponse(
        rows=[schemas.EvaluationRow(**row) for row in result["rows"]],
        report_path=result["report_path"],
        report_subjects_path=result["report_subjects_path"],
        manifest_path=result["manifest_path"],
        split=result["split"],
        subjects=result["subjects"],
    )


@app.post("/sweep", response_model=schemas.SweepResponse)
def sweep(request: schemas.SweepRequest) -> schemas.SweepResponse:
    grid = _run(pipeline.parse_grid, request.grid)
    result = _run(
        pipeline.run_sweep,
        request.models_dir,
        request.corpus_path,
        grid,
        request.split,
        request.out_dir,
        fs=request.fs,
    )
    return schemas.SweepResponse(
        summary=[schemas.SweepPoint(**point) for point in result["summary"]],
        best_alpha=result["best_alpha"],
        best_mean_mcc=result["best_mean_mcc"],
        sweep_subjects_path=result["sweep_subjects_path"],
        sweep_summary_path=result["sweep_summary_path"],
        manifest_path=result["manifest_path"],
        split=result["split"],
    )


@app.post("/classify", response_model=schemas.ClassifyResponse)
def classify_windows(request: schemas.ClassifyRequest) -> schemas.ClassifyResponse:
    def load():
        sd_model, _ = load_model(request.sd_model_path)
        si_model, _ = load_model(request.si_model_path)
        try:
            return FusedModel(sd=sd_model, si=si_model, alpha=request.alpha)
        except ValueError as exc:
            raise ValidationError(str(exc)) from exc

    try:
        model = _run(load)
    except FileNotFoundError as exc:
        raise HTTPException(status_code=400, detail=str(exc))

    decisions = []
    for i, payload in enumerate(request.windows):
        try:
            window = PpgWindow(
                samples=payload.samples, fs=payload.fs, subject_id="api", window_index=i
            )
            decision = classify(model, extract_features(window))
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=f"window {i}: {exc}")
        decisions.append(
            schemas.WindowDecision(
                predicted=decision.predicted.value,
                score_noisy=decision.score_noisy,
                score_clean=decision.score_clean,
                sqi=decision.sqi,
            )
        )
    return schemas.ClassifyResponse(decisions=decisions, alpha=request.alpha)
