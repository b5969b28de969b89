"""AIC grid search over the number of B-spline basis functions."""

from __future__ import annotations

import logging
from collections.abc import Sequence
from typing import Literal

import numpy as np

from graphon_connectome.config import get_settings
from graphon_connectome.design import CoefficientDesign, edge_features
from graphon_connectome.exceptions import ConfigError, ConvergenceError, DatasetError
from graphon_connectome.glm import OutcomeFits, fit_outcome_models
from graphon_connectome.models import ConnectomeDataset, TuneEntry, TuneReport
from graphon_connectome.splines import uniform_config

logger = logging.getLogger(__name__)


def default_grid() -> list[int]:
    settings = get_settings()
    return list(range(settings.tune_grid_min, settings.tune_grid_max + 1))


def fit_at_latents(
    data: ConnectomeDataset, K: int, xi: np.ndarray, delta: np.ndarray, degree: int = 3
) -> OutcomeFits:
    """Maximum-likelihood fits of the three regressions with the latents held fixed."""
    basis = uniform_config(K, degree)
    design = CoefficientDesign(
        edge_features(xi, basis, data.rows, data.cols),
        edge_features(delta, basis, data.rows, data.cols),
        data.covariates,
    )
    return fit_outcome_models(data.counts, data.log_lengths, design, require_full_rank=False)


def choose_K(
    grid: Sequence[int],
    aic: Sequence[float | None],
    rule: Literal["argmin", "knee"] = "knee",
    threshold: float = 0.01,
) -> int:
    """Pick K from averaged AICs; missing entries are never chosen.

    ``knee`` returns the smallest K whose AIC no larger K improves on by a
    relative margin of ``threshold`` or more.
    """
    valid = [(K, a) for K, a in sorted(zip(grid, aic)) if a is not None and np.isfinite(a)]
    if not valid:
        raise ConvergenceError("no basis size produced a valid AIC")
    if rule == "argmin":
        return min(valid, key=lambda item: (item[1], item[0]))[0]
    for idx, (K, a) in enumerate(valid):
        later = [b for _, b in valid[idx + 1 :]]
        if not later or (a - min(later)) < threshold * abs(a):
            return K
    return valid[-1][0]


def tune_basis_size(
    data: ConnectomeDataset,
    grid: Sequence[int] | None = None,
    latent_draws: int | None = None,
    seed: int | None = None,
    *,
    threshold: float | None = None,
    rule: Literal["argmin", "knee"] = "knee",
    degree: int = 3,
) -> TuneReport:
    """Average AIC over random uniform latents for every K in the grid.

    Each K draws its latents from its own stream seeded by (seed, K), so the
    result does not depend on the grid order and is unchanged by permuting
    subjects.
    """
    settings = get_settings()
    grid = sorted(set(grid if grid is not None else default_grid()))
    latent_draws = latent_draws or settings.tune_latent_draws
    seed = settings.default_seed if seed is None else seed
    threshold = settings.tune_knee_threshold if threshold is None else threshold
    if data.n == 0:
        raise DatasetError("cannot tune on an empty dataset")
    if not grid or min(grid) < max(4, degree + 1):
        raise ConfigError(f"every K in the tuning grid must be at least {max(4, degree + 1)}")

    entries: list[TuneEntry] = []
    for K in grid:
        rng = np.random.default_rng(np.random.SeedSequence([seed, K]))
        draws: list[float | None] = []
        for draw in range(latent_draws):
            xi = rng.uniform(size=data.J)
            delta = rng.uniform(size=data.J)
            value = fit_at_latents(data, K, xi, delta, degree).aic()
            if np.isfinite(value):
                draws.append(value)
            else:
                draws.append(None)
                logger.warning(
                    "Dropped tuning draw after a failed fit", extra={"K": K, "draw": draw}
                )
        kept = [v for v in draws if v is not None]
        entries.append(
            TuneEntry(
                K=K,
                aic_mean=float(np.mean(kept)) if kept else None,
                aic_draws=draws,
                n_valid=len(kept),
            )
        )
        logger.info(
            "Evaluated basis size",
            extra={"K": K, "aic_mean": entries[-1].aic_mean, "n_valid": len(kept)},
        )

    chosen = choose_K(grid, [e.aic_mean for e in entries], rule, threshold)
    logger.info("Selected basis size", extra={"K": chosen, "rule": rule})
    return TuneReport(entries=entries, chosen_K=chosen, rule=rule, threshold=threshold)
