"""Exact full-conditional draws: augmentation, inflation, normal blocks, scales."""

from __future__ import annotations

import numpy as np
from scipy import linalg, special, stats

from graphon_connectome.design import CoefficientDesign
from graphon_connectome.exceptions import SamplerError
from graphon_connectome.models import ConnectomeDataset, Hyperparams, LatentPrior, ModelState
from graphon_connectome.posterior import LENGTH, PRESENCE, model_design, predictor_arrays


def albert_chib_draw(
    presence: np.ndarray | bool, pi_linear: np.ndarray | float, rng: np.random.Generator
) -> np.ndarray:
    """Latent w ~ N(pi, 1) truncated to (0, inf) where present, (-inf, 0] otherwise."""
    presence = np.asarray(presence, dtype=bool)
    pi = np.asarray(pi_linear, dtype=float)
    presence, pi = np.broadcast_arrays(presence, pi)
    lower = np.where(presence, -pi, -np.inf)
    upper = np.where(presence, np.inf, -pi)
    return stats.truncnorm.rvs(lower, upper, loc=pi, scale=1.0, random_state=rng)


def zero_inflation_probability(pi: np.ndarray, lam: np.ndarray) -> np.ndarray:
    """P(Xi = 1 | N = 0) = Phi(pi) e^{-e^lam} / [Phi(pi) e^{-e^lam} + 1 - Phi(pi)]."""
    with np.errstate(over="ignore"):
        log_live = special.log_ndtr(pi) - np.exp(lam)
    return special.expit(log_live - special.log_ndtr(-pi))


def draw_zero_inflation(
    state: ModelState,
    data: ConnectomeDataset,
    rng: np.random.Generator,
    predictors: np.ndarray | None = None,
) -> np.ndarray:
    """Inflation indicators: Bernoulli on zero counts, 1 wherever a count is positive."""
    preds = predictor_arrays(state, data) if predictors is None else predictors
    prob = zero_inflation_probability(preds[PRESENCE], preds[2])
    draws = (rng.uniform(size=prob.shape) < prob).astype(np.int8)
    inflation = np.where(data.observed, 1, draws).astype(np.int8)
    if not np.all(inflation[data.observed] == 1):
        raise SamplerError("inflation indicator is zero on a positive count")
    return inflation


def draw_gaussian(
    precision: np.ndarray, linear: np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    """Draw from N(Q^{-1} b, Q^{-1}) given precision Q and linear term b."""
    try:
        factor = linalg.cho_factor(precision, lower=True)
    except (linalg.LinAlgError, ValueError) as exc:
        raise SamplerError("conditional precision is not positive definite") from exc
    mean = linalg.cho_solve(factor, linear)
    noise = linalg.solve_triangular(
        factor[0], rng.standard_normal(linear.shape[0]), lower=True, trans="T"
    )
    return mean + noise


def normal_block_terms(
    t: int,
    state: ModelState,
    data: ConnectomeDataset,
    hyper: Hyperparams,
    design: CoefficientDesign,
    augmented: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Precision and linear term of the (theta_t, gamma_t) full conditional."""
    offset = state.eta[t][:, None]
    if t == LENGTH:
        observed = data.observed
        W = np.where(observed, data.counts / state.sigma2, 0.0)
        y = np.where(observed, data.log_lengths - offset, 0.0)
    elif t == PRESENCE:
        if augmented is None:
            raise SamplerError("presence block needs current augmentation draws")
        W = np.ones_like(augmented)
        y = augmented - offset
    else:
        raise SamplerError(f"outcome {t} has no conjugate coefficient block")
    precision = design.gram(W) + np.eye(design.n_params) / hyper.a**2
    return precision, design.moment(W, y)


def gibbs_conjugate_normal_block(
    t: int,
    state: ModelState,
    data: ConnectomeDataset,
    hyper: Hyperparams,
    rng: np.random.Generator,
    *,
    augmented: np.ndarray | None = None,
    design: CoefficientDesign | None = None,
) -> ModelState:
    """Joint draw of theta_t and gamma_t for the length (t=0) or presence (t=1) model."""
    design = design or model_design(state, data)
    if data.n == 0:
        precision = np.eye(design.n_params) / hyper.a**2
        linear = np.zeros(design.n_params)
    else:
        precision, linear = normal_block_terms(t, state, data, hyper, design, augmented)
    theta_t, gamma_t = design.split(draw_gaussian(precision, linear, rng))
    theta, gamma = state.theta.copy(), state.gamma.copy()
    theta[t], gamma[t] = theta_t, gamma_t
    return state.updated(theta=theta, gamma=gamma)


def gibbs_random_effects(
    t: int,
    state: ModelState,
    data: ConnectomeDataset,
    rng: np.random.Generator,
    *,
    augmented: np.ndarray | None = None,
    design: CoefficientDesign | None = None,
) -> ModelState:
    """Per-subject normal draw of eta_t given tau2_t for t = 0 or 1."""
    design = design or model_design(state, data)
    fitted = design.fitted(design.stack(state.theta[t], state.gamma[t]))
    if t == LENGTH:
        W = np.where(data.observed, data.counts / state.sigma2, 0.0)
        resid = np.where(data.observed, data.log_lengths - fitted, 0.0)
    elif t == PRESENCE:
        if augmented is None:
            raise SamplerError("presence random effects need augmentation draws")
        W = np.ones_like(augmented)
        resid = augmented - fitted
    else:
        raise SamplerError(f"outcome {t} random effects are updated by HMC")
    precision = W.sum(axis=1) + 1.0 / state.tau2[t]
    mean = (W * resid).sum(axis=1) / precision
    eta = state.eta.copy()
    eta[t] = mean + rng.standard_normal(state.n) / np.sqrt(precision)
    return state.updated(eta=eta)


def sigma2_conditional(
    state: ModelState,
    data: ConnectomeDataset,
    hyper: Hyperparams,
    predictors: np.ndarray | None = None,
) -> tuple[float, float]:
    """Shape and rate of the gamma full conditional of 1/sigma2."""
    observed = data.observed
    if data.n == 0 or not observed.any():
        return hyper.d1, hyper.d2
    preds = predictor_arrays(state, data) if predictors is None else predictors
    resid = np.where(observed, data.log_lengths - preds[LENGTH], 0.0)
    shape = hyper.d1 + observed.sum() / 2.0
    rate = hyper.d2 + 0.5 * float(np.sum(data.counts * resid**2))
    return float(shape), rate


def gibbs_sigma2(
    state: ModelState,
    data: ConnectomeDataset,
    hyper: Hyperparams,
    rng: np.random.Generator,
    predictors: np.ndarray | None = None,
) -> float:
    """Draw sigma2 through its gamma-distributed precision."""
    shape, rate = sigma2_conditional(state, data, hyper, predictors)
    return 1.0 / rng.gamma(shape, 1.0 / rate)


def indicator_probability(delta: np.ndarray, hyper: Hyperparams) -> np.ndarray:
    """P(I_j = 1 | delta_j) under the uniform / Beta(M, M) mixture."""
    log_odds = (
        np.log(hyper.q) - np.log1p(-hyper.q) - stats.beta.logpdf(delta, hyper.M, hyper.M)
    )
    return special.expit(log_odds)


def flip_indicators(
    state: ModelState, hyper: Hyperparams, rng: np.random.Generator
) -> ModelState:
    """Exact draw of the mixture indicators; a no-op under the logit-normal prior."""
    if hyper.latent_prior is LatentPrior.logit_normal:
        return state
    prob = indicator_probability(state.delta, hyper)
    indicator = (rng.uniform(size=state.J) < prob).astype(np.int64)
    return state.updated(indicator=indicator)
