"""Posterior predictive evaluation on held-out subjects."""

from __future__ import annotations

import logging

import numpy as np

from graphon_connectome.design import CoefficientDesign, edge_features
from graphon_connectome.exceptions import RegionMismatchError, SummaryError
from graphon_connectome.metrics import prediction_metrics
from graphon_connectome.models import (
    AncovaFit,
    ConnectomeDataset,
    EdgePredictions,
    McmcRun,
    PredictionScores,
)
from graphon_connectome.posterior import COUNT, LENGTH, PRESENCE, count_loglik_entries

logger = logging.getLogger(__name__)


def check_compatible(run: McmcRun | AncovaFit, heldout: ConnectomeDataset) -> None:
    """Held-out data must share regions, covariates and edge set with the fit."""
    if list(heldout.region_names) != list(run.region_names):
        raise RegionMismatchError(
            f"held-out regions {heldout.region_names} differ from fitted {run.region_names}"
        )
    if list(heldout.covariate_names) != list(run.covariate_names):
        raise RegionMismatchError(
            f"held-out covariates {heldout.covariate_names} differ from "
            f"fitted {run.covariate_names}"
        )
    if heldout.self_edges != run.self_edges:
        raise RegionMismatchError("held-out self-edge setting differs from the fit")


def draw_new_effects(
    labels: np.ndarray,
    tau2: np.ndarray,
    alpha: float,
    b1: float,
    b2: float,
    size: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Random effects of unseen subjects from the DP predictive of one outcome.

    A new subject joins fitted cluster c with probability n_c / (n + alpha) and
    takes its scale, or opens a new cluster with scale drawn from IG(b1, b2).
    """
    clusters, first, sizes = np.unique(labels, return_index=True, return_counts=True)
    weights = np.append(sizes, alpha).astype(float)
    scales = np.append(tau2[first], np.nan)
    choice = rng.choice(clusters.size + 1, size=size, p=weights / weights.sum())
    fresh = choice == clusters.size
    out_scale = scales[choice]
    out_scale[fresh] = 1.0 / rng.gamma(b1, 1.0 / b2, int(fresh.sum()))
    return np.sqrt(out_scale) * rng.standard_normal(size)


def posterior_predictive_arrays(
    run: McmcRun, heldout: ConnectomeDataset, rng: np.random.Generator
) -> EdgePredictions:
    """Posterior-averaged predictions for every held-out subject and edge.

    The length prediction is the mean of mu over draws; the count score is the
    log of the draw-averaged zero-inflated Poisson probability of the observed
    count. Random effects of held-out subjects are drawn once per posterior draw.
    """
    check_compatible(run, heldout)
    S = run.n_samples
    if S < 1:
        raise SummaryError("run holds no posterior draws")
    basis = run.final_state.basis
    hyper = run.hyper
    n = heldout.n
    mu_sum = np.zeros((n, heldout.E))
    log_prob = np.full((n, heldout.E), -np.inf)
    for s in range(S):
        design = CoefficientDesign(
            edge_features(run.draws["xi"][s], basis, heldout.rows, heldout.cols),
            edge_features(run.draws["delta"][s], basis, heldout.rows, heldout.cols),
            heldout.covariates,
        )
        preds = []
        for t in range(3):
            pred = design.fitted(
                design.stack(run.draws["theta"][s, t], run.draws["gamma"][s, t])
            )
            if hyper.random_effects:
                eta = draw_new_effects(
                    run.draws["labels"][s, t],
                    run.draws["tau2"][s, t],
                    float(run.draws["alpha"][s, t]),
                    hyper.b1,
                    hyper.b2,
                    n,
                    rng,
                )
                pred = pred + eta[:, None]
            preds.append(pred)
        mu_sum += preds[LENGTH]
        with np.errstate(over="ignore"):
            entry = count_loglik_entries(preds[PRESENCE], preds[COUNT], heldout.counts)
        log_prob = np.logaddexp(log_prob, entry)
    return EdgePredictions(
        mu=mu_sum / S, count_loglik=log_prob - np.log(S), method="bayes"
    )


def posterior_predict(
    run: McmcRun, heldout: ConnectomeDataset, seed: int = 0
) -> PredictionScores:
    """Held-out length MSE and mean count log-likelihood under the posterior."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, heldout.n]))
    predictions = posterior_predictive_arrays(run, heldout, rng)
    scores = prediction_metrics(predictions, heldout)
    logger.info(
        "Posterior predictive scores",
        extra={
            "length_mse": scores.length_mse,
            "count_mean_loglik": scores.count_mean_loglik,
            "samples": run.n_samples,
        },
    )
    return scores

