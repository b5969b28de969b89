"""Synthetic connectomes from smooth ground-truth graphons.

Every truth matrix has the symmetrised form

    M[j, k] = (f(-a x_j - b x_k) + f(-b x_j - a x_k)) / 2 + (e[j, k] + e[k, j]) / 2

with x the baseline latents xi for the three baselines and the effect latents
delta for the covariate effects, e ~ N(0, 0.05), and f a cubic for the
baselines, exp for MCI, sin for AD, cos for male and the identity for age.
"""

from __future__ import annotations

import logging
from collections.abc import Callable, Mapping

import numpy as np

from graphon_connectome.exceptions import ConfigError
from graphon_connectome.models import (
    DEFAULT_COVARIATES,
    ConnectomeDataset,
    Outcome,
    TruthSpec,
    edge_index,
    family_names,
)
from graphon_connectome.models.common import BASELINE_NAMES, EFFECT_PREFIXES
from graphon_connectome.samplers import draw_observations

logger = logging.getLogger(__name__)

CovariateSampler = Callable[[int, np.random.Generator], np.ndarray]

NOISE_VARIANCE = 0.05

_WEIGHTS = {
    Outcome.length: (0.5, 0.4),
    Outcome.presence: (0.7, 1.0),
    Outcome.count: (0.5, 0.4),
}
_LINKS: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "baseline": lambda x: x**3,
    "mci": np.exp,
    "ad": np.sin,
    "male": np.cos,
    "age": lambda x: x,
}


def sample_covariates(n: int, rng: np.random.Generator, age_sd: float = 7.0) -> np.ndarray:
    """(MCI, AD, male, age) rows: diagnosis uniform over NC/MCI/AD, male ~ Bern(1/2)."""
    category = rng.integers(0, 3, size=n)
    male = rng.uniform(size=n) < 0.5
    age = age_sd * rng.standard_normal(n)
    return np.column_stack([category == 1, category == 2, male, age]).astype(float)


def symmetric_truth(
    link: Callable[[np.ndarray], np.ndarray],
    weights: tuple[float, float],
    latents: np.ndarray,
    rng: np.random.Generator,
) -> np.ndarray:
    """One truth matrix; exactly symmetric by construction."""
    a, b = weights
    x = latents
    left = link(-a * x[:, None] - b * x[None, :])
    right = link(-b * x[:, None] - a * x[None, :])
    e = np.sqrt(NOISE_VARIANCE) * rng.standard_normal((x.size, x.size))
    return (left + right) / 2 + (e + e.T) / 2


def generate_truth(
    J: int,
    rng: np.random.Generator,
    overrides: Mapping[str, float | np.ndarray] | None = None,
) -> tuple[np.ndarray, np.ndarray, dict[str, np.ndarray]]:
    """Latents (xi, delta) ~ U(0, 1) and the fifteen truth matrices.

    ``overrides`` replaces named families by a constant or a J x J matrix.
    """
    if J < 2:
        raise ConfigError(f"need at least two regions, got J={J}")
    xi = rng.uniform(size=J)
    delta = rng.uniform(size=J)
    matrices: dict[str, np.ndarray] = {}
    for outcome in _WEIGHTS:
        matrices[BASELINE_NAMES[outcome]] = symmetric_truth(
            _LINKS["baseline"], _WEIGHTS[outcome], xi, rng
        )
    for outcome in _WEIGHTS:
        for cov in DEFAULT_COVARIATES:
            matrices[f"{EFFECT_PREFIXES[outcome]}_{cov}"] = symmetric_truth(
                _LINKS[cov], _WEIGHTS[outcome], delta, rng
            )
    for name, value in (overrides or {}).items():
        if name not in matrices:
            raise ConfigError(f"unknown truth family {name!r}")
        mat = np.broadcast_to(np.asarray(value, dtype=float), (J, J)).copy()
        matrices[name] = (mat + mat.T) / 2
    ordered = {name: matrices[name] for name in family_names(DEFAULT_COVARIATES)}
    return xi, delta, ordered


def truth_predictors(
    matrices: Mapping[str, np.ndarray],
    covariates: np.ndarray,
    eta: np.ndarray,
    self_edges: bool = False,
) -> np.ndarray:
    """(mu, pi, lambda) arrays of shape (3, n, E) implied by the truth matrices."""
    J = next(iter(matrices.values())).shape[0]
    rows, cols = edge_index(J, self_edges)
    out = []
    for outcome in _WEIGHTS:
        base = matrices[BASELINE_NAMES[outcome]][rows, cols]
        effects = np.stack(
            [
                matrices[f"{EFFECT_PREFIXES[outcome]}_{cov}"][rows, cols]
                for cov in DEFAULT_COVARIATES
            ]
        )
        out.append(base[None, :] + covariates @ effects + eta[outcome.index][:, None])
    return np.stack(out)


def generate_dataset(
    J: int,
    n: int,
    seed: int,
    covariate_sampler: CovariateSampler | None = None,
    *,
    sigma_true: float = 0.5,
    random_effect_sd: float = 0.0,
    overrides: Mapping[str, float | np.ndarray] | None = None,
    truth: tuple[np.ndarray, np.ndarray, dict[str, np.ndarray]] | None = None,
) -> tuple[ConnectomeDataset, TruthSpec]:
    """Draw a dataset and the truth behind it.

    A precomputed ``truth`` (latents and matrices) is reused as given, so
    replications can share one ground truth while redrawing subjects.
    """
    if n < 1:
        raise ConfigError(f"need at least one subject, got n={n}")
    if sigma_true < 0 or random_effect_sd < 0:
        raise ConfigError("noise scales must be non-negative")
    rng = np.random.default_rng(seed)
    xi, delta, matrices = truth if truth is not None else generate_truth(J, rng, overrides)
    J = xi.size
    sampler = covariate_sampler or sample_covariates
    covariates = np.asarray(sampler(n, rng), dtype=float)
    if covariates.shape != (n, len(DEFAULT_COVARIATES)):
        raise ConfigError(
            f"covariate sampler returned shape {covariates.shape}, expected "
            f"({n}, {len(DEFAULT_COVARIATES)})"
        )
    eta = (
        random_effect_sd * rng.standard_normal((3, n))
        if random_effect_sd > 0
        else np.zeros((3, n))
    )
    preds = truth_predictors(matrices, covariates, eta)
    counts, lengths, inflation = draw_observations(preds, sigma_true**2, rng)

    data = ConnectomeDataset(
        subject_ids=[f"s{i + 1:04d}" for i in range(n)],
        region_names=[f"r{j + 1:02d}" for j in range(J)],
        covariate_names=list(DEFAULT_COVARIATES),
        counts=counts,
        lengths=lengths,
        covariates=covariates,
    )
    spec = TruthSpec(
        J=J,
        n=n,
        xi=xi,
        delta=delta,
        matrices=matrices,
        sigma_true=sigma_true,
        eta=eta,
        inflation=inflation,
    )
    logger.debug(
        "Generated dataset",
        extra={"J": J, "n": n, "connected": float(data.observed.mean())},
    )
    return data, spec
