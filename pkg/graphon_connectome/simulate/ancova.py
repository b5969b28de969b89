"""Per-edge ANCOVA baseline: independent regressions on (1, Z) for every edge."""

from __future__ import annotations

import logging

import numpy as np
from scipy import special

from graphon_connectome.design import DenseDesign
from graphon_connectome.glm import GlmFamily, GlmResult, fit_glm
from graphon_connectome.inference import check_compatible
from graphon_connectome.models import (
    OUTCOMES,
    AncovaFit,
    ConnectomeDataset,
    EdgePredictions,
    Outcome,
)
from graphon_connectome.models.common import BASELINE_NAMES, EFFECT_PREFIXES
from graphon_connectome.posterior import count_loglik_entries

logger = logging.getLogger(__name__)


def _families(outcome: Outcome, covariate_names: list[str]) -> list[str]:
    prefix = EFFECT_PREFIXES[outcome]
    return [BASELINE_NAMES[outcome]] + [f"{prefix}_{c}" for c in covariate_names]


def smoothed_intercepts(data: ConnectomeDataset) -> dict[str, np.ndarray]:
    """Closed-form intercept-only estimates per edge, defined even for sparse edges.

    Presence uses the probit of (connected + 1/2) / (n + 1); counts use the log
    of (total fibres + 1/2) / (connected + 1); lengths use the count-weighted
    mean log length, or the pooled mean over all edges when an edge is never
    connected.
    """
    observed = data.observed
    connected = observed.sum(axis=0)
    counts = data.counts.astype(float)
    presence = special.ndtri((connected + 0.5) / (data.n + 1.0))
    count = np.log((counts.sum(axis=0) + 0.5) / (connected + 1.0))
    log_len = np.where(observed, data.log_lengths, 0.0)
    weight = counts.sum(axis=0)
    pooled = float((log_len * counts).sum() / weight.sum()) if weight.sum() > 0 else 0.0
    with np.errstate(invalid="ignore", divide="ignore"):
        length = np.where(weight > 0, (log_len * counts).sum(axis=0) / weight, pooled)
    return {
        Outcome.length.value: length,
        Outcome.presence.value: presence,
        Outcome.count.value: count,
    }


def _fit_edge(X: DenseDesign, data: ConnectomeDataset, e: int) -> dict[Outcome, GlmResult]:
    counts = data.counts[:, e]
    observed = counts >= 1
    return {
        Outcome.length: fit_glm(
            X,
            data.log_lengths[:, e],
            GlmFamily.gaussian,
            mask=observed,
            weights=counts.astype(float),
        ),
        Outcome.presence: fit_glm(X, observed.astype(float), GlmFamily.probit),
        Outcome.count: fit_glm(X, counts.astype(float), GlmFamily.poisson, mask=observed),
    }


def ancova_fit(data: ConnectomeDataset) -> AncovaFit:
    """Fit every edge independently, ignoring zero inflation and random effects.

    Rank deficiency or non-convergence marks all estimates of that outcome on
    that edge as missing (NaN).
    """
    names = list(data.covariate_names)
    X = DenseDesign(np.column_stack([np.ones(data.n), data.covariates]))
    estimates = {
        family: np.full(data.E, np.nan) for o in OUTCOMES for family in _families(o, names)
    }
    converged = {o.value: np.zeros(data.E, dtype=bool) for o in OUTCOMES}
    ss, n_obs = 0.0, 0
    for e in range(data.E):
        fits = _fit_edge(X, data, e)
        for outcome, result in fits.items():
            if result.failed:
                continue
            converged[outcome.value][e] = True
            for family, value in zip(_families(outcome, names), result.coef):
                estimates[family][e] = value
        length = fits[Outcome.length]
        if not length.failed:
            ss += length.scale * length.n_obs
            n_obs += length.n_obs

    missing = {o.value: int((~converged[o.value]).sum()) for o in OUTCOMES}
    logger.info("ANCOVA fit complete", extra={"edges": data.E, "missing": missing})
    return AncovaFit(
        J=data.J,
        region_names=list(data.region_names),
        self_edges=data.self_edges,
        covariate_names=names,
        estimates=estimates,
        converged=converged,
        fallback=smoothed_intercepts(data),
        sigma2=ss / n_obs if n_obs else float("nan"),
    )


def ancova_predictors(fit: AncovaFit, covariates: np.ndarray) -> np.ndarray:
    """(mu, pi, lambda) for new subjects; shape (3, n, E).

    Edges whose fit is missing are predicted by the smoothed intercept.
    """
    z = np.column_stack([np.ones(covariates.shape[0]), covariates])
    out = []
    for outcome in OUTCOMES:
        coef = np.stack([fit.estimates[f] for f in _families(outcome, fit.covariate_names)])
        ok = fit.converged[outcome.value]
        fitted = z @ np.where(ok, coef, 0.0)
        out.append(np.where(ok[None, :], fitted, fit.fallback[outcome.value][None, :]))
    return np.stack(out)


def ancova_predict(fit: AncovaFit, heldout: ConnectomeDataset) -> EdgePredictions:
    """Plug-in predictions of the per-edge fits for held-out subjects."""
    check_compatible(fit, heldout)
    mu, pi, lam = ancova_predictors(fit, heldout.covariates)
    with np.errstate(over="ignore"):
        loglik = count_loglik_entries(pi, lam, heldout.counts)
    return EdgePredictions(mu=mu, count_loglik=loglik, method="ancova")
