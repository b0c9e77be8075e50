"""Command-line front end: a thin client over the pipeline layer.

Exit codes: 0 success, 1 runtime failure, 2 input validation failure
(argparse usage errors included).
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from . import __version__
from .errors import PipelineError, ValidationError
from .fusion import DEFAULT_ALPHA_GRID
from . import pipeline


def _alpha(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"alpha must be a number, got {text!r}")
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError(f"alpha must lie in [0, 1], got {value}")
    return value


def _grid(text: str) -> tuple[float, ...]:
    try:
        return pipeline.parse_grid(text)
    except ValidationError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="it2sqa",
        description="Personalised, adjustable PPG signal-quality assessment.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate the synthetic labelled study")
    p.add_argument("--config", help="TOML config with [study] and [ga] tables")
    p.add_argument("--seed", type=int, help="override the study seed")
    p.add_argument("--subjects", type=int, help="override the subject count")
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("train", help="train SI and per-subject SD rule bases")
    p.add_argument("corpus", help="corpus CSV produced by synth or ingest")
    p.add_argument("--config", help="TOML config with [study] and [ga] tables")
    p.add_argument("--seed", type=int, help="override the GA seed")
    p.add_argument("--parallel", action="store_true", help="evaluate fitness in parallel")
    p.add_argument("--out", required=True, help="output directory for model files")

    p = sub.add_parser("evaluate", help="report metrics for alpha 0, 1 and the request")
    p.add_argument("corpus", help="corpus CSV")
    p.add_argument("--models", required=True, help="directory holding si.json and sd_*.json")
    p.add_argument("--alpha", type=_alpha, default=0.7)
    p.add_argument("--split", choices=["train", "validation", "test"], default="validation")
    p.add_argument("--fs", type=float, default=200.0)
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("sweep", help="sweep the personalisation score alpha")
    p.add_argument("corpus", help="corpus CSV")
    p.add_argument("--models", required=True, help="directory holding si.json and sd_*.json")
    p.add_argument("--grid", type=_grid, default=DEFAULT_ALPHA_GRID, help="a:step:b, default 0:0.1:1")
    p.add_argument("--split", choices=["train", "validation", "test"], default="validation")
    p.add_argument("--fs", type=float, default=200.0)
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("ingest", help="window a raw single-column signal CSV")
    p.add_argument("raw", help="single-column CSV of samples")
    p.add_argument("--fs", type=float, required=True, help="sampling rate in Hz")
    p.add_argument("--subject", default="imported", help="subject id for the windows")
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    return parser


def _load_config(args) -> pipeline.RunConfig:
    if getattr(args, "config", None):
        return pipeline.load_run_config(args.config)
    return pipeline.RunConfig()


def _cmd_synth(args) -> int:
    config = _load_config(args)
    if args.subjects is not None:
        if args.subjects < 1:
            raise ValidationError(f"--subjects must be >= 1, got {args.subjects}")
        config = pipeline.RunConfig(
            study=replace(config.study, n_subjects=args.subjects), ga=config.ga
        )
    result = pipeline.run_synth(config, args.out, config_path=args.config, seed=args.seed)
    print(
        f"wrote {result['n_windows']} windows "
        f"({result['n_noisy']} noisy / {result['n_clean']} clean) "
        f"for {result['n_subjects']} subjects to {result['corpus_path']}"
    )
    return 0


def _cmd_train(args) -> int:
    config = _load_config(args)
    result = pipeline.run_train(
        args.corpus, config, args.out,
        config_path=args.config, seed=args.seed, parallel=args.parallel,
    )
    for subject_id, reason in sorted(result["skipped_subjects"].items()):
        print(f"warning: subject {subject_id} not trainable: {reason}", file=sys.stderr)
    n_sd = len(result["sd_model_paths"])
    print(f"wrote 1 SI model and {n_sd} SD models to {args.out}")
    return 0


def _cmd_evaluate(args) -> int:
    result = pipeline.run_evaluate(
        args.models, args.corpus, args.alpha, args.split, args.out, fs=args.fs
    )
    for row in result["rows"]:
        print(
            f"{row['model_type']:>12} (alpha={row['alpha']:g}): "
            f"mcc={row['mcc_mean']:.4f} ({row['mcc_std']:.4f}) "
            f"acc={row['acc_mean']:.4f} ({row['acc_std']:.4f})"
        )
    print(f"report written to {result['report_path']}")
    return 0


def _cmd_sweep(args) -> int:
    result = pipeline.run_sweep(
        args.models, args.corpus, args.grid, args.split, args.out, fs=args.fs
    )
    print(
        f"best alpha {result['best_alpha']:g} "
        f"with mean MCC {result['best_mean_mcc']:.4f} on split {result['split']}"
    )
    print(f"summary written to {result['sweep_summary_path']}")
    return 0


def _cmd_ingest(args) -> int:
    result = pipeline.run_ingest(args.raw, args.fs, args.out, subject_id=args.subject)
    print(
        f"wrote {result['n_windows']} windows to {result['corpus_path']} "
        f"({result['samples_discarded']} trailing samples discarded)"
    )
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service.app import app

    uvicorn.run(app, host=args.host, port=args.port)
    return 0


_COMMANDS = {
    "synth": _cmd_synth,
    "train": _cmd_train,
    "evaluate": _cmd_evaluate,
    "sweep": _cmd_sweep,
    "ingest": _cmd_ingest,
    "serve": _cmd_serve,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
