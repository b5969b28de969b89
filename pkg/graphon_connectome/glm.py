"""Iteratively reweighted least squares for Gaussian, probit and Poisson GLMs."""

from __future__ import annotations

import logging
from enum import Enum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy import linalg, special, stats

from graphon_connectome.config import get_settings
from graphon_connectome.design import LinearDesign

logger = logging.getLogger(__name__)

_ETA_CLIP = 30.0
_PROBIT_CLIP = 8.0


class GlmFamily(str, Enum):
    gaussian = "gaussian"
    probit = "probit"
    poisson = "poisson"


class GlmResult(BaseModel):
    """Maximum-likelihood fit; ``coef`` is NaN when the fit failed."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    coef: np.ndarray
    loglik: float
    converged: bool
    iterations: int
    rank_deficient: bool = False
    scale: float = 1.0
    n_obs: int

    @property
    def failed(self) -> bool:
        return self.rank_deficient or not self.converged


def _solve(gram: np.ndarray, rhs: np.ndarray, require_full_rank: bool) -> np.ndarray | None:
    if require_full_rank:
        if np.linalg.matrix_rank(gram, hermitian=True) < gram.shape[0]:
            return None
        try:
            return linalg.solve(gram, rhs, assume_a="pos")
        except linalg.LinAlgError:
            return None
    return np.linalg.lstsq(gram, rhs, rcond=None)[0]


def _failed(p: int, n_obs: int, iterations: int, rank_deficient: bool) -> GlmResult:
    return GlmResult(
        coef=np.full(p, np.nan),
        loglik=np.nan,
        converged=False,
        iterations=iterations,
        rank_deficient=rank_deficient,
        n_obs=n_obs,
    )


def gaussian_loglik(
    residual: np.ndarray, weights: np.ndarray, sigma2: float, mask: np.ndarray
) -> float:
    """Log-likelihood of residuals with variance sigma2 / weight."""
    w, r = weights[mask], residual[mask]
    return float(
        np.sum(-0.5 * np.log(2 * np.pi * sigma2 / w) - w * r**2 / (2 * sigma2))
    )


def probit_loglik(eta: np.ndarray, y: np.ndarray, mask: np.ndarray) -> float:
    e, t = eta[mask], y[mask]
    return float(np.sum(np.where(t > 0, special.log_ndtr(e), special.log_ndtr(-e))))


def poisson_loglik(eta: np.ndarray, y: np.ndarray, mask: np.ndarray) -> float:
    e, t = eta[mask], y[mask]
    return float(np.sum(t * e - np.exp(e) - special.gammaln(t + 1)))


def _loglik(family: GlmFamily, eta: np.ndarray, y: np.ndarray, mask: np.ndarray) -> float:
    with np.errstate(over="ignore", invalid="ignore"):
        if family is GlmFamily.poisson:
            value = poisson_loglik(eta, y, mask)
        else:
            value = probit_loglik(eta, y, mask)
    return value if np.isfinite(value) else -np.inf


def _working(
    family: GlmFamily, eta: np.ndarray, y: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """IRLS weights and working response at the current linear predictor."""
    if family is GlmFamily.poisson:
        mu = np.exp(np.clip(eta, -_ETA_CLIP, _ETA_CLIP))
        return mu, eta + (y - mu) / mu
    clipped = np.clip(eta, -_PROBIT_CLIP, _PROBIT_CLIP)
    mu = np.clip(special.ndtr(clipped), 1e-12, 1 - 1e-12)
    density = np.maximum(stats.norm.pdf(clipped), 1e-300)
    return density**2 / (mu * (1 - mu)), eta + (y - mu) / density


def _starting_eta(family: GlmFamily, y: np.ndarray, mask: np.ndarray) -> np.ndarray:
    if family is GlmFamily.poisson:
        return np.full_like(y, np.log(max(float(y[mask].mean()), 1e-8)))
    return np.zeros_like(y)


def fit_glm(
    design: LinearDesign,
    response: np.ndarray,
    family: GlmFamily,
    *,
    mask: np.ndarray | None = None,
    weights: np.ndarray | None = None,
    max_iter: int | None = None,
    tol: float | None = None,
    require_full_rank: bool = True,
) -> GlmResult:
    """Fit a GLM by IRLS over the observations selected by ``mask``.

    ``weights`` are prior weights for the Gaussian family (variance sigma2 / w);
    they are ignored for the other families. Observations outside the mask
    may hold NaN.

    Poisson fits start from the log of the mean count, probit fits from zero,
    projected onto the design. Each scoring step is halved until the
    log-likelihood does not decrease, and the fit has converged once the
    relative change in log-likelihood (half the deviance change) drops to
    ``tol``. Rank deficiency (when ``require_full_rank``), non-finite iterates
    and non-convergence return a result with NaN coefficients.
    """
    settings = get_settings()
    max_iter = settings.irls_max_iter if max_iter is None else max_iter
    tol = settings.irls_tol if tol is None else tol

    y = np.asarray(response, dtype=float)
    mask = np.isfinite(y) if mask is None else (np.asarray(mask, dtype=bool) & np.isfinite(y))
    y = np.where(mask, y, 0.0)
    p = design.n_params
    n_obs = int(mask.sum())
    on = mask.astype(float)

    if family is GlmFamily.gaussian:
        w = np.ones_like(y) if weights is None else np.where(mask, weights, 0.0)
        beta = _solve(design.gram(w * on), design.moment(w * on, y), require_full_rank)
        if beta is None or not np.all(np.isfinite(beta)) or n_obs == 0:
            return _failed(p, n_obs, 1, beta is None)
        residual = y - design.fitted(beta)
        sigma2 = float(np.sum(on * w * residual**2) / n_obs)
        if sigma2 <= 0:
            sigma2 = np.finfo(float).tiny
        return GlmResult(
            coef=beta,
            loglik=gaussian_loglik(residual, np.where(mask, w, 1.0), sigma2, mask),
            converged=True,
            iterations=1,
            scale=sigma2,
            n_obs=n_obs,
        )

    if n_obs == 0:
        return _failed(p, n_obs, 0, False)
    beta = _solve(
        design.gram(on), design.moment(on, _starting_eta(family, y, mask)), require_full_rank
    )
    if beta is None:
        return _failed(p, n_obs, 0, True)
    eta = design.fitted(beta)
    loglik = _loglik(family, eta, y, mask)
    if not np.isfinite(loglik):
        return _failed(p, n_obs, 0, False)

    for iteration in range(1, max_iter + 1):
        W, z = _working(family, eta, y)
        target = _solve(design.gram(W * on), design.moment(W * on, z), require_full_rank)
        if target is None:
            return _failed(p, n_obs, iteration, True)
        if not np.all(np.isfinite(target)):
            logger.warning(
                "IRLS produced non-finite coefficients",
                extra={"family": family.value, "iteration": iteration},
            )
            return _failed(p, n_obs, iteration, False)

        direction = target - beta
        step = 1.0
        for _ in range(settings.irls_max_halvings + 1):
            trial = beta + step * direction
            trial_eta = design.fitted(trial)
            trial_loglik = _loglik(family, trial_eta, y, mask)
            if trial_loglik >= loglik:
                break
            step /= 2
        else:
            # no ascent left along the scoring direction
            return GlmResult(
                coef=beta, loglik=loglik, converged=True, iterations=iteration, n_obs=n_obs
            )

        change = trial_loglik - loglik
        beta, eta, loglik = trial, trial_eta, trial_loglik
        if change <= tol * (abs(loglik) + 0.1):
            return GlmResult(
                coef=beta, loglik=loglik, converged=True, iterations=iteration, n_obs=n_obs
            )

    logger.warning(
        "IRLS did not converge",
        extra={"family": family.value, "max_iter": max_iter, "loglik": loglik},
    )
    return _failed(p, n_obs, max_iter, False)


class OutcomeFits(BaseModel):
    """Maximum-likelihood fits of the three edge regressions at fixed latents."""

    length: GlmResult
    presence: GlmResult
    count: GlmResult
    n_params: int = Field(description="Free coefficients per regression")

    @property
    def failed(self) -> bool:
        return self.length.failed or self.presence.failed or self.count.failed

    def aic(self) -> float:
        """Sum over the three regressions of 2p - 2 loglik; NaN if any fit failed."""
        if self.failed:
            return float("nan")
        loglik = self.length.loglik + self.presence.loglik + self.count.loglik
        return float(3 * 2 * self.n_params - 2 * loglik)


def fit_outcome_models(
    counts: np.ndarray,
    log_lengths: np.ndarray,
    design: LinearDesign,
    *,
    require_full_rank: bool = True,
) -> OutcomeFits:
    """Weighted least squares for log lengths, probit for presence, Poisson for counts.

    The length fit uses the counts as precision weights over connected edges;
    the probit fit uses every entry; the Poisson fit ignores zero inflation and
    uses connected edges only.
    """
    observed = counts >= 1
    kwargs = {"require_full_rank": require_full_rank}
    return OutcomeFits(
        length=fit_glm(
            design,
            log_lengths,
            GlmFamily.gaussian,
            mask=observed,
            weights=counts.astype(float),
            **kwargs,
        ),
        presence=fit_glm(design, observed.astype(float), GlmFamily.probit, **kwargs),
        count=fit_glm(design, counts.astype(float), GlmFamily.poisson, mask=observed, **kwargs),
        n_params=design.n_params,
    )
