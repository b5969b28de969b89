"""Forward simulation from the prior and the observation model."""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np
from scipy import special

from graphon_connectome.models import (
    ConnectomeDataset,
    Hyperparams,
    LatentPrior,
    ModelState,
    edge_index,
)
from graphon_connectome.posterior import predictor_arrays


def draw_observations(
    predictors: np.ndarray,
    sigma2: float,
    rng: np.random.Generator,
    inflation: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Counts, mean lengths and inflation indicators given (mu, pi, lambda) arrays.

    Xi ~ Bernoulli(Phi(pi)) unless ``inflation`` is supplied; N ~ Poisson(e^lambda)
    where Xi = 1 and 0 otherwise; log L ~ N(mu, sigma2 / N) where N >= 1.
    """
    mu, pi, lam = predictors
    if inflation is None:
        inflation = (rng.uniform(size=pi.shape) < special.ndtr(pi)).astype(np.int8)
    counts = np.where(inflation == 1, rng.poisson(np.exp(lam)), 0)
    observed = counts >= 1
    safe = np.where(observed, counts, 1)
    log_len = mu + np.sqrt(sigma2 / safe) * rng.standard_normal(mu.shape)
    lengths = np.where(observed, np.exp(log_len), np.nan)
    return counts.astype(np.int64), lengths, inflation.astype(np.int8)


def sample_prior(
    n: int,
    J: int,
    d: int,
    hyper: Hyperparams,
    rng: np.random.Generator,
    self_edges: bool = False,
) -> ModelState:
    """Draw a full parameter state from the prior (inflation left at 1)."""
    basis = hyper.basis()
    P = basis.n_free
    E = len(edge_index(J, self_edges)[0])
    theta = hyper.a * rng.standard_normal((3, P))
    gamma = hyper.a * rng.standard_normal((3, d, P))
    xi = special.expit(hyper.a * rng.standard_normal(J))
    if hyper.latent_prior is LatentPrior.logit_normal:
        indicator = np.zeros(J, dtype=np.int64)
        delta = special.expit(hyper.a * rng.standard_normal(J))
    else:
        indicator = (rng.uniform(size=J) < hyper.q).astype(np.int64)
        delta = np.where(indicator == 1, rng.uniform(size=J), rng.beta(hyper.M, hyper.M, J))

    eta = np.zeros((3, n))
    tau2 = np.ones((3, n))
    labels = np.zeros((3, n), dtype=np.int64)
    alpha = rng.gamma(hyper.c1, 1.0 / hyper.c2, 3)
    if hyper.random_effects:
        for t in range(3):
            scales: list[float] = []
            sizes: list[int] = []
            for i in range(n):
                weights = np.array(sizes + [alpha[t]], dtype=float)
                c = int(rng.choice(len(weights), p=weights / weights.sum()))
                if c == len(sizes):
                    scales.append(1.0 / rng.gamma(hyper.b1, 1.0 / hyper.b2))
                    sizes.append(0)
                sizes[c] += 1
                labels[t, i] = c
                tau2[t, i] = scales[c]
            eta[t] = np.sqrt(tau2[t]) * rng.standard_normal(n)
    sigma2 = 1.0 / rng.gamma(hyper.d1, 1.0 / hyper.d2)
    return ModelState(
        basis=basis,
        theta=theta,
        gamma=gamma,
        xi=xi,
        delta=delta,
        indicator=indicator,
        eta=eta,
        tau2=tau2,
        labels=labels,
        alpha=alpha,
        sigma2=sigma2,
        inflation=np.ones((n, E), dtype=np.int8),
    )


def simulate_observations(
    state: ModelState,
    covariates: np.ndarray,
    rng: np.random.Generator,
    *,
    region_names: Sequence[str] | None = None,
    covariate_names: Sequence[str] | None = None,
    self_edges: bool = False,
    keep_inflation: bool = False,
) -> tuple[ConnectomeDataset, ModelState]:
    """Observations drawn from the model at ``state``.

    Returns the dataset and the state with its realised inflation indicators.
    With ``keep_inflation`` the state's indicators are held fixed.
    """
    n, J = covariates.shape[0], state.J
    E = len(edge_index(J, self_edges)[0])
    shell = ConnectomeDataset(
        subject_ids=[f"s{i + 1:03d}" for i in range(n)],
        region_names=list(region_names or [f"r{j + 1:02d}" for j in range(J)]),
        covariate_names=list(covariate_names or [f"z{l + 1}" for l in range(covariates.shape[1])]),
        counts=np.zeros((n, E), dtype=np.int64),
        lengths=np.full((n, E), np.nan),
        covariates=covariates,
        self_edges=self_edges,
    )
    preds = predictor_arrays(state, shell)
    counts, lengths, inflation = draw_observations(
        preds, state.sigma2, rng, state.inflation if keep_inflation else None
    )
    data = shell.model_copy(update={"counts": counts, "lengths": lengths})
    return data, state.updated(inflation=inflation)
