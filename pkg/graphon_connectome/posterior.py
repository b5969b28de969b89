"""Joint log-posterior of the graphon regression model and its block gradients.

Each subject/edge observation contributes

    count + presence:  log Phi(pi) + N lambda - exp(lambda) - log N!      (N >= 1)
                       log[ Phi(-pi) + Phi(pi) exp(-exp(lambda)) ]       (N == 0)
    length:            -N (log L - mu)^2 / (2 sigma2) - 1/2 log(2 pi sigma2 / N)

with the zero-inflation indicator integrated out on zero counts. Phi(pi) is
the probability that an edge can carry fibres. ``log_likelihood`` with
``marginalize=False`` conditions on the state's inflation indicators instead.
Additive constants depending only on hyperparameters are dropped from the
prior.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from typing import Literal

import numpy as np
from scipy import special, stats

from graphon_connectome.design import CoefficientDesign, edge_features
from graphon_connectome.exceptions import EvaluationError
from graphon_connectome.models import (
    DEFAULT_COVARIATES,
    ConnectomeDataset,
    Hyperparams,
    LatentPrior,
    ModelState,
    family_names,
)
from graphon_connectome.splines import (
    basis_derivative_matrix,
    basis_matrix,
    free_to_matrix,
    graphon_eval,
    graphon_matrix,
)

logger = logging.getLogger(__name__)

HmcBlock = Literal["count_coefficients", "count_effects", "xi", "delta"]
HMC_BLOCKS: tuple[HmcBlock, ...] = ("count_coefficients", "count_effects", "xi", "delta")

LENGTH, PRESENCE, COUNT = 0, 1, 2
_STATE_BLOCKS = ("theta", "gamma", "xi", "delta", "eta", "tau2", "alpha")


def model_design(state: ModelState, data: ConnectomeDataset) -> CoefficientDesign:
    """Coefficient design at the state's latents, shared by all three outcomes."""
    phi_base = edge_features(state.xi, state.basis, data.rows, data.cols)
    phi_effect = edge_features(state.delta, state.basis, data.rows, data.cols)
    return CoefficientDesign(phi_base, phi_effect, data.covariates)


def predictor_arrays(
    state: ModelState, data: ConnectomeDataset, design: CoefficientDesign | None = None
) -> np.ndarray:
    """Linear predictors of all outcomes; shape (3, n, E) ordered (mu, pi, lambda)."""
    design = design or model_design(state, data)
    return np.stack(
        [
            design.fitted(design.stack(state.theta[t], state.gamma[t]))
            + state.eta[t][:, None]
            for t in range(3)
        ]
    )


def linear_predictors(
    state: ModelState, data: ConnectomeDataset, i: int, j: int, k: int
) -> tuple[float, float, float]:
    """(mu, pi, lambda) of subject i on edge (j, k), evaluated point by point."""
    if not 0 <= i < data.n:
        raise IndexError(f"subject index {i} out of range for n={data.n}")
    if not (0 <= j < data.J and 0 <= k < data.J):
        raise IndexError(f"edge ({j}, {k}) out of range for J={data.J}")
    if j == k and not data.self_edges:
        raise IndexError(f"self-edge ({j}, {k}) is not modelled")
    z = data.covariates[i]
    values = []
    for t in range(3):
        value = graphon_eval(state.coefficient_matrix(t), state.xi[j], state.xi[k], state.basis)
        for l in range(state.d):
            value += (
                graphon_eval(
                    state.coefficient_matrix(t, l), state.delta[j], state.delta[k], state.basis
                )
                * z[l]
            )
        values.append(value + state.eta[t, i])
    return values[0], values[1], values[2]


def count_loglik_entries(
    pi: np.ndarray, lam: np.ndarray, counts: np.ndarray
) -> np.ndarray:
    """Zero-inflated Poisson log-probability of each count, inflation integrated out."""
    rate = np.exp(lam)
    present = special.log_ndtr(pi) + counts * lam - rate - special.gammaln(counts + 1)
    absent = np.logaddexp(special.log_ndtr(-pi), special.log_ndtr(pi) - rate)
    return np.where(counts >= 1, present, absent)


def length_loglik_entries(
    mu: np.ndarray, log_lengths: np.ndarray, counts: np.ndarray, sigma2: float
) -> np.ndarray:
    """Gaussian log-density of log mean lengths with variance sigma2 / N; 0 where N == 0."""
    observed = counts >= 1
    N = np.where(observed, counts, 1)
    resid = np.where(observed, log_lengths - mu, 0.0)
    value = -N * resid**2 / (2 * sigma2) - 0.5 * np.log(2 * np.pi * sigma2 / N)
    return np.where(observed, value, 0.0)


def _check_finite(state: ModelState) -> None:
    for name in _STATE_BLOCKS:
        if not np.all(np.isfinite(getattr(state, name))):
            raise EvaluationError("non-finite parameter values", block=name)
    if not np.isfinite(state.sigma2):
        raise EvaluationError("non-finite parameter values", block="sigma2")


def _in_support(state: ModelState) -> bool:
    return bool(
        np.all((state.xi > 0) & (state.xi < 1))
        and np.all((state.delta > 0) & (state.delta < 1))
        and state.sigma2 > 0
    )


def log_likelihood(
    state: ModelState,
    data: ConnectomeDataset,
    *,
    marginalize: bool = True,
    predictors: np.ndarray | None = None,
) -> float:
    """Sum of the per-observation log-likelihood terms."""
    _check_finite(state)
    if data.n == 0:
        return 0.0
    if not _in_support(state):
        return -np.inf
    preds = predictor_arrays(state, data) if predictors is None else predictors
    counts = data.counts
    with np.errstate(over="ignore"):
        length = length_loglik_entries(preds[LENGTH], data.log_lengths, counts, state.sigma2)
        if marginalize:
            count = count_loglik_entries(preds[PRESENCE], preds[COUNT], counts)
        else:
            pi, lam = preds[PRESENCE], preds[COUNT]
            live = state.inflation == 1
            poisson = counts * lam - np.exp(lam) - special.gammaln(counts + 1)
            count = np.where(
                live, special.log_ndtr(pi) + poisson, special.log_ndtr(-pi)
            )
            if np.any(~live & (counts >= 1)):
                count = np.where(~live & (counts >= 1), -np.inf, count)
    total = float(np.sum(length) + np.sum(count))
    if np.isnan(total):
        raise EvaluationError("log-likelihood is NaN", block="likelihood")
    return total


def _logit(p: np.ndarray) -> np.ndarray:
    return np.log(p) - np.log1p(-p)


def _cluster_values(labels: np.ndarray, tau2: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Cluster sizes and the shared scale of each cluster."""
    unique, first, sizes = np.unique(labels, return_index=True, return_counts=True)
    return sizes, tau2[first]


def crp_log_eppf(sizes: np.ndarray, alpha: float) -> float:
    """Log probability of a partition with the given block sizes under a CRP."""
    n = int(np.sum(sizes))
    return float(
        len(sizes) * np.log(alpha)
        + np.sum(special.gammaln(sizes))
        + special.gammaln(alpha)
        - special.gammaln(alpha + n)
    )


def log_prior_terms(state: ModelState, hyper: Hyperparams) -> dict[str, float]:
    """Individual log-prior contributions; each is -inf when off support."""
    _check_finite(state)
    terms: dict[str, float] = {}
    a2 = hyper.a**2
    terms["coefficients"] = float(
        -(np.sum(state.theta**2) + np.sum(state.gamma**2)) / (2 * a2)
    )

    def logit_normal(x: np.ndarray) -> float:
        if np.any((x <= 0) | (x >= 1)):
            return -np.inf
        return float(np.sum(-_logit(x) ** 2 / (2 * a2) - np.log(x) - np.log1p(-x)))

    terms["xi"] = logit_normal(state.xi)
    if hyper.latent_prior is LatentPrior.logit_normal:
        terms["delta"] = logit_normal(state.delta)
        terms["indicator"] = 0.0
    else:
        if np.any((state.delta <= 0) | (state.delta >= 1)) or np.any(
            (state.indicator != 0) & (state.indicator != 1)
        ):
            terms["delta"] = -np.inf
        else:
            beta_density = stats.beta.pdf(state.delta, hyper.M, hyper.M)
            terms["delta"] = float(
                np.sum(np.log((1 - state.indicator) * beta_density + state.indicator))
            )
        I = state.indicator
        terms["indicator"] = float(
            np.sum(I * np.log(hyper.q) + (1 - I) * np.log1p(-hyper.q))
        )

    if hyper.random_effects:
        if np.any(state.tau2 <= 0) or np.any(state.alpha <= 0):
            terms["random_effects"] = -np.inf
            terms["dp"] = -np.inf
            terms["alpha"] = -np.inf
        else:
            terms["random_effects"] = float(
                np.sum(-0.5 * np.log(state.tau2) - state.eta**2 / (2 * state.tau2))
            )
            dp = 0.0
            for t in range(3):
                sizes, scales = _cluster_values(state.labels[t], state.tau2[t])
                dp += float(
                    np.sum(stats.invgamma.logpdf(scales, hyper.b1, scale=hyper.b2))
                )
                dp += crp_log_eppf(sizes, float(state.alpha[t]))
            terms["dp"] = dp
            terms["alpha"] = float(
                np.sum((hyper.c1 - 1) * np.log(state.alpha) - hyper.c2 * state.alpha)
            )

    if state.sigma2 <= 0:
        terms["sigma2"] = -np.inf
    else:
        precision = 1.0 / state.sigma2
        terms["sigma2"] = float((hyper.d1 - 1) * np.log(precision) - hyper.d2 * precision)
    return terms


def log_prior(state: ModelState, hyper: Hyperparams) -> float:
    """Sum of ``log_prior_terms``; -inf off support, never NaN."""
    total = float(sum(log_prior_terms(state, hyper).values()))
    if np.isnan(total):
        raise EvaluationError("log-prior is NaN", block="prior")
    return total


def log_posterior(state: ModelState, data: ConnectomeDataset, hyper: Hyperparams) -> float:
    prior = log_prior(state, hyper)
    if prior == -np.inf:
        return -np.inf
    return prior + log_likelihood(state, data)


def predictor_partials(
    preds: np.ndarray, data: ConnectomeDataset, sigma2: float
) -> np.ndarray:
    """Partials of the marginal log-likelihood with respect to (mu, pi, lambda)."""
    mu, pi, lam = preds
    counts = data.counts
    observed = counts >= 1
    with np.errstate(over="ignore", invalid="ignore"):
        rate = np.exp(lam)
        log_pdf = stats.norm.logpdf(pi)
        log_cdf = special.log_ndtr(pi)
        absent = np.logaddexp(special.log_ndtr(-pi), log_cdf - rate)
        d_lam = np.where(
            observed, counts - rate, -rate * np.exp(log_cdf - rate - absent)
        )
        d_pi = np.where(
            observed,
            np.exp(log_pdf - log_cdf),
            np.exp(log_pdf - absent) * np.expm1(-rate),
        )
        d_mu = np.where(observed, counts * (data.log_lengths - mu) / sigma2, 0.0)
    d_mu = np.where(observed, d_mu, 0.0)
    return np.stack([d_mu, d_pi, d_lam])


def _latent_gradient(
    latents: np.ndarray,
    coefficients: Sequence[np.ndarray],
    weights: Sequence[np.ndarray],
    state: ModelState,
    rows: np.ndarray,
    cols: np.ndarray,
) -> np.ndarray:
    """Gradient of sum_e w[e] g(u_rows[e], u_cols[e]) over graphons g, wrt the latents."""
    B = basis_matrix(latents, state.basis)
    dB = basis_derivative_matrix(latents, state.basis)
    grad = np.zeros_like(latents)
    for free, w in zip(coefficients, weights):
        D = dB @ free_to_matrix(free, state.basis.K) @ B.T
        np.add.at(grad, rows, w * D[rows, cols])
        np.add.at(grad, cols, w * D[cols, rows])
    return grad


def block_position(state: ModelState, block: HmcBlock) -> np.ndarray:
    """Unconstrained HMC coordinates of a block."""
    if block == "count_coefficients":
        return np.concatenate([state.theta[COUNT], state.gamma[COUNT].reshape(-1)])
    if block == "count_effects":
        return state.eta[COUNT].copy()
    if block == "xi":
        return _logit(state.xi)
    if block == "delta":
        return _logit(state.delta)
    raise EvaluationError(f"unknown HMC block {block!r}", block=str(block))


def with_block_position(state: ModelState, block: HmcBlock, x: np.ndarray) -> ModelState:
    """State with a block replaced from its HMC coordinates."""
    if block == "count_coefficients":
        P = state.P
        theta = state.theta.copy()
        gamma = state.gamma.copy()
        theta[COUNT] = x[:P]
        gamma[COUNT] = x[P:].reshape(state.d, P)
        return state.updated(theta=theta, gamma=gamma)
    if block == "count_effects":
        eta = state.eta.copy()
        eta[COUNT] = x
        return state.updated(eta=eta)
    if block in ("xi", "delta"):
        return state.updated(**{block: special.expit(x)})
    raise EvaluationError(f"unknown HMC block {block!r}", block=str(block))


def block_value_and_grad(
    state: ModelState, data: ConnectomeDataset, hyper: Hyperparams, block: HmcBlock
) -> tuple[float, np.ndarray]:
    """Log-density of a block in its HMC coordinates, and its gradient.

    Latent blocks live in logit space; their density includes the Jacobian
    log u(1 - u) of the inverse-logit map.
    """
    prior = log_prior(state, hyper)
    if prior == -np.inf:
        return -np.inf, np.full(block_position(state, block).shape, np.nan)
    design = model_design(state, data) if data.n else None
    preds = predictor_arrays(state, data, design) if design is not None else None
    value = prior + log_likelihood(state, data, predictors=preds)
    if block in ("xi", "delta"):
        u = getattr(state, block)
        value += float(np.sum(np.log(u) + np.log1p(-u)))
    grad = grad_log_posterior(state, data, hyper, block, design=design, predictors=preds)
    return value, grad


def grad_log_posterior(
    state: ModelState,
    data: ConnectomeDataset,
    hyper: Hyperparams,
    block: HmcBlock,
    *,
    design: CoefficientDesign | None = None,
    predictors: np.ndarray | None = None,
) -> np.ndarray:
    """Analytic gradient of the log-posterior with respect to one HMC block.

    Coefficient and random-effect blocks are differentiated directly; latent
    blocks are differentiated in logit coordinates, Jacobian included.
    """
    _check_finite(state)
    if block not in HMC_BLOCKS:
        raise EvaluationError(f"unknown HMC block {block!r}", block=str(block))
    a2 = hyper.a**2
    if data.n:
        design = design or model_design(state, data)
        preds = predictor_arrays(state, data, design) if predictors is None else predictors
        G = predictor_partials(preds, data, state.sigma2)
    else:
        design = None
        G = np.zeros((3, 0, data.E))

    if block == "count_coefficients":
        prior = -block_position(state, block) / a2
        grad = prior if design is None else design.gradient(G[COUNT]) + prior
    elif block == "count_effects":
        if hyper.random_effects:
            grad = G[COUNT].sum(axis=1) - state.eta[COUNT] / state.tau2[COUNT]
        else:
            grad = np.zeros(state.n)
    elif block == "xi":
        weights = [G[t].sum(axis=0) for t in range(3)]
        like = _latent_gradient(
            state.xi, [state.theta[t] for t in range(3)], weights, state, data.rows, data.cols
        )
        x = _logit(state.xi)
        grad = like * state.xi * (1 - state.xi) - x / a2
    else:
        coefficients, weights = [], []
        for t in range(3):
            H = G[t].T @ data.covariates
            for l in range(state.d):
                coefficients.append(state.gamma[t, l])
                weights.append(H[:, l])
        like = _latent_gradient(
            state.delta, coefficients, weights, state, data.rows, data.cols
        )
        u = state.delta
        if hyper.latent_prior is LatentPrior.logit_normal:
            prior = -_logit(u) / a2
        else:
            slope = 1 - 2 * u
            prior = (1 - state.indicator) * (hyper.M - 1) * slope + slope
        grad = like * u * (1 - u) + prior

    if not np.all(np.isfinite(grad)):
        raise EvaluationError("non-finite gradient", block=block)
    return grad


def effect_names(state: ModelState, covariate_names: Sequence[str] | None = None) -> list[str]:
    if covariate_names is None:
        covariate_names = (
            DEFAULT_COVARIATES if state.d == len(DEFAULT_COVARIATES)
            else [f"z{l + 1}" for l in range(state.d)]
        )
    return family_names(covariate_names)


def reconstruct_effect_matrices(
    state: ModelState, covariate_names: Sequence[str] | None = None
) -> dict[str, np.ndarray]:
    """All baseline and covariate-effect matrices at the node latents.

    Returns family name -> exactly symmetric J x J matrix, in the order of
    ``family_names``.
    """
    names = effect_names(state, covariate_names)
    B_xi = basis_matrix(state.xi, state.basis)
    B_delta = basis_matrix(state.delta, state.basis)
    mats = [graphon_matrix(state.theta[t], B_xi) for t in range(3)]
    for t in range(3):
        mats.extend(graphon_matrix(state.gamma[t, l], B_delta) for l in range(state.d))
    return dict(zip(names, mats))
