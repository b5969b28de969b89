"""Simulation study: Bayes graphon fit against the per-edge ANCOVA baseline."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor

import numpy as np
from pydantic import BaseModel, ConfigDict

from graphon_connectome.config import get_settings
from graphon_connectome.exceptions import GraphonError, SummaryError
from graphon_connectome.inference import effect_draws, posterior_predictive_arrays
from graphon_connectome.metrics import accuracy, prediction_metrics
from graphon_connectome.models import (
    AccuracyCell,
    ConnectomeDataset,
    PredictionRow,
    StudyConfig,
    StudyReport,
    family_names,
)
from graphon_connectome.samplers import run_chains

from .ancova import ancova_fit, ancova_predict
from .truth import generate_dataset, generate_truth

logger = logging.getLogger(__name__)


class CellResult(BaseModel):
    """Estimates and prediction scores of every method for one (n, replication)."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    n: int
    replication: int
    estimates: dict[str, dict[str, np.ndarray]]
    prediction: list[PredictionRow]


def split_halves(
    data: ConnectomeDataset, fraction: float
) -> tuple[ConnectomeDataset, ConnectomeDataset]:
    """Leading ``fraction`` of subjects for training, the rest held out."""
    n_train = min(max(1, int(round(fraction * data.n))), data.n - 1)
    return data.subset(range(n_train)), data.subset(range(n_train, data.n))


def _cell_seed(config: StudyConfig, n: int, replication: int) -> int:
    sequence = np.random.SeedSequence([config.seed, n, replication])
    return int(sequence.generate_state(1)[0])


def run_cell(
    config: StudyConfig,
    truth: tuple[np.ndarray, np.ndarray, dict[str, np.ndarray]],
    n: int,
    replication: int,
) -> CellResult:
    """Generate one dataset, fit the requested methods on its training half."""
    seed = _cell_seed(config, n, replication)
    try:
        data, _ = generate_dataset(
            config.J,
            n,
            seed,
            sigma_true=config.sigma_true,
            random_effect_sd=config.random_effect_sd,
            truth=truth,
        )
        train, test = split_halves(data, config.train_fraction)
        families = family_names(data.covariate_names)
        estimates: dict[str, dict[str, np.ndarray]] = {}
        rows: list[PredictionRow] = []
        for method in config.methods:
            if method == "bayes":
                schedule = config.schedule.model_copy(update={"seed": seed})
                run = run_chains(train, config.hyper, schedule, threads=1)
                means = effect_draws(run).mean(axis=1)
                estimates[method] = dict(zip(families, means))
                predictions = posterior_predictive_arrays(
                    run, test, np.random.default_rng(seed)
                )
            else:
                fit = ancova_fit(train)
                estimates[method] = {f: fit.estimates[f] for f in families}
                predictions = ancova_predict(fit, test)
            scores = prediction_metrics(predictions, test)
            rows.append(
                PredictionRow(
                    n=n,
                    replication=replication,
                    method=method,
                    length_mse=scores.length_mse,
                    count_mean_loglik=scores.count_mean_loglik,
                )
            )
    except GraphonError as exc:
        exc.add_note(f"simulation cell n={n}, replication={replication}")
        logger.error(
            "Simulation cell failed", extra={"n": n, "replication": replication}
        )
        raise
    logger.info("Simulation cell done", extra={"n": n, "replication": replication})
    return CellResult(n=n, replication=replication, estimates=estimates, prediction=rows)


def _cell_job(
    args: tuple[StudyConfig, tuple[np.ndarray, np.ndarray, dict[str, np.ndarray]], int, int]
) -> CellResult:
    return run_cell(*args)


def aggregate(
    config: StudyConfig,
    truth: dict[str, np.ndarray],
    cells: list[CellResult],
) -> StudyReport:
    """Deterministic reduction of cell results, independent of completion order."""
    cells = sorted(cells, key=lambda c: (c.n, c.replication))
    J = next(iter(truth.values())).shape[0]
    rows, cols = np.triu_indices(J, k=1)
    accuracy_cells: dict[int, list[AccuracyCell]] = {}
    for n in sorted(set(config.n_list)):
        group = [c for c in cells if c.n == n]
        entries: list[AccuracyCell] = []
        for family, matrix in truth.items():
            for method in config.methods:
                estimates = [c.estimates[method][family] for c in group]
                try:
                    entries.append(
                        accuracy(
                            estimates, matrix[rows, cols], family=family, method=method
                        )
                    )
                except SummaryError:
                    logger.warning(
                        "No accuracy cell: fewer than two estimated replications",
                        extra={"n": n, "family": family, "method": method},
                    )
        if entries:
            accuracy_cells[n] = entries
    prediction = [row for c in cells for row in c.prediction]
    return StudyReport(config=config, accuracy=accuracy_cells, prediction=prediction)


def run_study(config: StudyConfig) -> StudyReport:
    """Every (n, replication) cell, fanned out over worker processes when threads > 1."""
    truth = generate_truth(
        config.J, np.random.default_rng(np.random.SeedSequence([config.seed]))
    )
    jobs = [
        (config, truth, n, r)
        for n in sorted(set(config.n_list))
        for r in range(config.replications)
    ]
    threads = config.threads or get_settings().threads
    logger.info(
        "Starting simulation study",
        extra={"cells": len(jobs), "methods": config.methods, "threads": threads},
    )
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(threads, len(jobs))) as pool:
            cells = list(pool.map(_cell_job, jobs))
    else:
        cells = [_cell_job(job) for job in jobs]
    return aggregate(config, truth[2], cells)
