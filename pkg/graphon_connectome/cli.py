"""Command-line entry point: fit, tune, summarize, predict, simulate and study.

Every subcommand takes an optional YAML config; flags override file values.
Exit codes: 0 success, 1 unexpected failure, 2 missing or unreadable input,
3 invalid data or configuration, 4 numerical or sampler failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from collections.abc import Sequence
from pathlib import Path
from typing import Any

import pandas as pd
import yaml
from pydantic import ValidationError

from graphon_connectome.artifacts import atomic_open, write_frame, write_json, write_text
from graphon_connectome.config import get_settings
from graphon_connectome.exceptions import (
    ConfigError,
    ConvergenceError,
    DatasetError,
    EvaluationError,
    RegionMismatchError,
    SamplerError,
    SummaryError,
    SymmetryError,
)
from graphon_connectome.inference import (
    edge_plot_data,
    posterior_predict,
    summarize_effects,
    tune_basis_size,
    with_diagnostics,
)
from graphon_connectome.ingest import load_dataset, write_dataset
from graphon_connectome.models import (
    ConnectomeDataset,
    McmcRun,
    RunConfig,
    StudyConfig,
    TraceRecord,
)
from graphon_connectome.samplers import run_chains
from graphon_connectome.simulate import generate_dataset, run_study

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_INPUT = 2
EXIT_INVALID = 3
EXIT_NUMERICAL = 4

_INVALID = (
    ConfigError,
    DatasetError,
    RegionMismatchError,
    SymmetryError,
    ValidationError,
    yaml.YAMLError,
)
_NUMERICAL = (ConvergenceError, EvaluationError, SamplerError, SummaryError)

_HYPER_FLAGS = ("a", "M", "q", "b1", "b2", "c1", "c2", "d1", "d2")
_SCHEDULE_FLAGS = ("burn_in", "samples", "thin", "chains", "seed")


def load_yaml(path: Path | None) -> dict[str, Any]:
    """Mapping from a YAML config file; empty when no file is given."""
    if path is None:
        return {}
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"config file not found: {path}")
    with open(path, encoding="utf-8") as handle:
        data = yaml.safe_load(handle) or {}
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must hold a mapping")
    return data


def _overlay(base: dict[str, Any], key: str, value: Any) -> None:
    if value is not None:
        base[key] = value


def build_run_config(command: str, args: argparse.Namespace) -> RunConfig:
    """RunConfig from the YAML file with command-line flags applied on top."""
    data = load_yaml(args.config)
    data["command"] = command
    hyper = dict(data.get("hyper") or {})
    schedule = dict(data.get("schedule") or {})
    for name in _HYPER_FLAGS:
        _overlay(hyper, name, getattr(args, name, None))
    for name in _SCHEDULE_FLAGS:
        _overlay(schedule, name, getattr(args, name, None))
    if getattr(args, "no_random_effects", False):
        hyper["random_effects"] = False
    data["hyper"], data["schedule"] = hyper, schedule
    for name in (
        "edges",
        "covariates",
        "output_dir",
        "checkpoint",
        "heldout_edges",
        "heldout_covariates",
        "K",
        "latent_prior",
        "tune_grid",
        "top",
        "threads",
    ):
        _overlay(data, name, getattr(args, name, None))
    if getattr(args, "self_edges", False):
        data["self_edges"] = True
    if getattr(args, "resume", False):
        data["resume"] = True
    return RunConfig.model_validate(data)


def _require(path: Path | None, what: str) -> Path:
    if path is None:
        raise ConfigError(f"{what} path is required")
    return path


def _load(config: RunConfig) -> ConnectomeDataset:
    return load_dataset(
        _require(config.edges, "edges"),
        _require(config.covariates, "covariates"),
        self_edges=config.self_edges,
    )


def _trace_frame(run: McmcRun) -> pd.DataFrame:
    columns = list(TraceRecord.model_fields)
    return pd.DataFrame([rec.model_dump() for rec in run.trace], columns=columns)


def write_summary(run: McmcRun, output_dir: Path, top: int | None) -> None:
    """Effect CSV and edge-plot JSON of a completed run."""
    summary = summarize_effects(run, top=top)
    write_text(output_dir / "effects.csv", summary.to_csv())
    write_json(output_dir / "edge_plot.json", edge_plot_data(summary, run.region_names))


def cmd_tune(config: RunConfig) -> int:
    data = _load(config)
    report = tune_basis_size(data, config.tune_grid, seed=config.schedule.seed)
    write_frame(config.output_dir / "tune.csv", report.to_frame())
    logger.info("Tuning written", extra={"K": report.chosen_K})
    return EXIT_OK


def cmd_fit(config: RunConfig) -> int:
    data = _load(config)
    K = None
    if config.K == "auto":
        report = tune_basis_size(data, config.tune_grid, seed=config.schedule.seed)
        write_frame(config.output_dir / "tune.csv", report.to_frame())
        K = report.chosen_K
    hyper = config.resolved_hyper(K)
    run = run_chains(
        data,
        hyper,
        config.schedule,
        threads=config.threads,
        checkpoint_dir=config.output_dir / "checkpoints",
        resume=config.resume,
    )
    run = with_diagnostics(run)
    with atomic_open(config.output_dir / "posterior.npz", "wb") as handle:
        run.save(handle)
    write_frame(config.output_dir / "trace.csv", _trace_frame(run))
    write_json(config.output_dir / "diagnostics.json", run.diagnostics)
    write_summary(run, config.output_dir, config.top)
    logger.info(
        "Fit complete",
        extra={"K": hyper.K, "samples": run.n_samples, "acceptance": run.acceptance},
    )
    return EXIT_OK


def cmd_summarize(config: RunConfig) -> int:
    run = McmcRun.load(_require(config.checkpoint, "checkpoint"))
    write_summary(run, config.output_dir, config.top)
    return EXIT_OK


def cmd_predict(config: RunConfig) -> int:
    run = McmcRun.load(_require(config.checkpoint, "checkpoint"))
    heldout = load_dataset(
        _require(config.heldout_edges, "held-out edges"),
        _require(config.heldout_covariates, "held-out covariates"),
        self_edges=run.self_edges,
        region_names=run.region_names,
        age_center=run.age_center,
    )
    scores = posterior_predict(run, heldout, seed=config.schedule.seed)
    write_json(config.output_dir / "predict.json", scores.model_dump())
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    data = load_yaml(args.config)
    for name in ("J", "n", "seed", "sigma_true", "random_effect_sd"):
        _overlay(data, name, getattr(args, name))
    output_dir = Path(args.output_dir or data.get("output_dir", "out"))
    dataset, truth = generate_dataset(
        int(data.get("J", 20)),
        int(data.get("n", 500)),
        int(data.get("seed", get_settings().default_seed)),
        sigma_true=float(data.get("sigma_true", 0.5)),
        random_effect_sd=float(data.get("random_effect_sd", 0.0)),
    )
    write_dataset(dataset, output_dir / "edges.csv", output_dir / "covariates.csv")
    write_json(
        output_dir / "truth.json",
        {
            "xi": truth.xi.tolist(),
            "delta": truth.delta.tolist(),
            "sigma_true": truth.sigma_true,
            "matrices": {k: v.tolist() for k, v in truth.matrices.items()},
        },
    )
    logger.info(
        "Simulated dataset",
        extra={
            "n": dataset.n,
            "J": dataset.J,
            "connected": float(dataset.observed.mean()),
        },
    )
    return EXIT_OK


def build_study_config(args: argparse.Namespace) -> StudyConfig:
    data = load_yaml(args.config)
    for name in (
        "J", "n_list", "replications", "methods", "seed", "threads", "sigma_true"
    ):
        _overlay(data, name, getattr(args, name))
    schedule = dict(data.get("schedule") or {})
    for name in ("burn_in", "samples"):
        _overlay(schedule, name, getattr(args, name))
    if schedule:
        data["schedule"] = schedule
    return StudyConfig.model_validate(data)


def cmd_study(args: argparse.Namespace) -> int:
    config = build_study_config(args)
    output_dir = Path(args.output_dir or "out")
    report = run_study(config)
    for n in sorted(report.accuracy):
        write_frame(output_dir / f"accuracy_n{n}.csv", report.accuracy_frame(n))
    write_frame(output_dir / "prediction.csv", report.prediction_frame())
    write_text(output_dir / "report.md", report.to_markdown())
    return EXIT_OK


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="YAML configuration file")
    parser.add_argument(
        "--output-dir", dest="output_dir", type=Path, help="Artifact directory"
    )


def _data_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--edges", type=Path, help="Edge CSV")
    parser.add_argument("--covariates", type=Path, help="Covariate CSV")
    parser.add_argument("--self-edges", dest="self_edges", action="store_true")


def _model_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--K", type=_basis_size, help="Basis size or 'auto'")
    parser.add_argument(
        "--latent-prior", dest="latent_prior", choices=["beta_mixture", "logit_normal"]
    )
    parser.add_argument("--tune-grid", dest="tune_grid", type=int, nargs="+")
    parser.add_argument(
        "--no-random-effects", dest="no_random_effects", action="store_true"
    )
    for name in _HYPER_FLAGS:
        parser.add_argument(f"--{name}", type=float)


def _schedule_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--burn-in", dest="burn_in", type=int)
    parser.add_argument("--samples", type=int)
    parser.add_argument("--thin", type=int)
    parser.add_argument("--chains", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--threads", type=int)


def _basis_size(value: str) -> int | str:
    return value if value == "auto" else int(value)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="graphon-connectome",
        description="Bayesian graphon regression for multi-subject connectomes",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    fit = sub.add_parser("fit", help="Tune K if needed, sample the posterior, summarize")
    _common(fit)
    _data_flags(fit)
    _model_flags(fit)
    _schedule_flags(fit)
    fit.add_argument("--top", type=int, help="Keep the top-ranked edges per family")
    fit.add_argument("--resume", action="store_true", help="Continue from checkpoints")

    tune = sub.add_parser("tune", help="AIC grid search over the basis size")
    _common(tune)
    _data_flags(tune)
    tune.add_argument("--tune-grid", dest="tune_grid", type=int, nargs="+")
    tune.add_argument("--seed", type=int)

    summarize = sub.add_parser("summarize", help="Re-summarize a saved posterior")
    _common(summarize)
    summarize.add_argument("--checkpoint", type=Path, help="posterior.npz of a fit")
    summarize.add_argument("--top", type=int)

    predict = sub.add_parser("predict", help="Held-out prediction scores")
    _common(predict)
    predict.add_argument("--checkpoint", type=Path, help="posterior.npz of a fit")
    predict.add_argument("--heldout-edges", dest="heldout_edges", type=Path)
    predict.add_argument("--heldout-covariates", dest="heldout_covariates", type=Path)
    predict.add_argument("--seed", type=int)

    simulate = sub.add_parser("simulate", help="Write a synthetic dataset")
    _common(simulate)
    simulate.add_argument("--J", type=int)
    simulate.add_argument("--n", type=int)
    simulate.add_argument("--seed", type=int)
    simulate.add_argument("--sigma-true", dest="sigma_true", type=float)
    simulate.add_argument("--random-effect-sd", dest="random_effect_sd", type=float)

    study = sub.add_parser("study", help="Simulation study against the ANCOVA baseline")
    _common(study)
    study.add_argument("--J", type=int)
    study.add_argument("--n-list", dest="n_list", type=int, nargs="+")
    study.add_argument("--replications", type=int)
    study.add_argument("--methods", nargs="+", choices=["bayes", "ancova"])
    study.add_argument("--seed", type=int)
    study.add_argument("--threads", type=int)
    study.add_argument("--sigma-true", dest="sigma_true", type=float)
    study.add_argument("--burn-in", dest="burn_in", type=int)
    study.add_argument("--samples", type=int)
    return parser


def dispatch(args: argparse.Namespace) -> int:
    if args.command == "simulate":
        return cmd_simulate(args)
    if args.command == "study":
        return cmd_study(args)
    config = build_run_config(args.command, args)
    handlers = {
        "fit": cmd_fit,
        "tune": cmd_tune,
        "summarize": cmd_summarize,
        "predict": cmd_predict,
    }
    return handlers[config.command](config)


def main(argv: Sequence[str] | None = None) -> int:
    """Parse arguments, run the subcommand and map failures to exit codes."""
    settings = get_settings()
    logging.basicConfig(level=settings.log_level, format=settings.log_format)
    args = build_parser().parse_args(argv)
    try:
        return dispatch(args)
    except (FileNotFoundError, PermissionError, IsADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except _INVALID as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except _NUMERICAL as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except Exception:
        logger.exception("Unexpected failure")
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
