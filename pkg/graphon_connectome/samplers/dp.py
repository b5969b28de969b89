"""Dirichlet-process scale mixture: collapsed CRP reassignment and precision updates."""

from __future__ import annotations

import logging

import numpy as np
from scipy import special, stats

from graphon_connectome.exceptions import SamplerError
from graphon_connectome.models import Hyperparams, ModelState

logger = logging.getLogger(__name__)

_LOG_2PI = np.log(2 * np.pi)


def log_marginal_effect(eta: np.ndarray | float, b1: float, b2: float) -> np.ndarray:
    """Log density of eta ~ N(0, tau2) with tau2 ~ IG(b1, b2) integrated out (scaled t)."""
    eta = np.asarray(eta, dtype=float)
    return (
        b1 * np.log(b2)
        + special.gammaln(b1 + 0.5)
        - special.gammaln(b1)
        - 0.5 * _LOG_2PI
        - (b1 + 0.5) * np.log(b2 + eta**2 / 2)
    )


def _inverse_gamma(shape: float, scale: float, rng: np.random.Generator) -> float:
    return float(1.0 / rng.gamma(shape, 1.0 / scale))


def relabel(labels: np.ndarray) -> np.ndarray:
    """Renumber cluster labels 0, 1, ... in order of first appearance."""
    mapping: dict[int, int] = {}
    out = np.empty_like(labels)
    for i, label in enumerate(labels.tolist()):
        out[i] = mapping.setdefault(label, len(mapping))
    return out


def dp_scale_update(
    t: int, state: ModelState, hyper: Hyperparams, rng: np.random.Generator
) -> ModelState:
    """One collapsed Gibbs sweep over the scale assignments of outcome t.

    Each subject joins an existing cluster c with weight n_c N(eta_i; 0, tau2_c)
    or opens a new one with weight alpha_t times the scaled-t marginal; a new
    cluster's scale is drawn from IG(b1 + 1/2, b2 + eta_i^2 / 2). Every
    occupied cluster's scale is then redrawn from its conjugate posterior.
    """
    eta = state.eta[t]
    alpha = float(state.alpha[t])
    n = state.n
    if n == 0:
        return state
    labels = relabel(state.labels[t])
    scales: dict[int, float] = {}
    for i in range(n):
        scales.setdefault(int(labels[i]), float(state.tau2[t, i]))
    sizes: dict[int, int] = {}
    for label in labels.tolist():
        sizes[label] = sizes.get(label, 0) + 1
    next_label = max(scales) + 1
    log_new_base = np.log(alpha) + log_marginal_effect(eta, hyper.b1, hyper.b2)

    for i in range(n):
        current = int(labels[i])
        sizes[current] -= 1
        if sizes[current] == 0:
            del sizes[current]
            del scales[current]
        keys = list(sizes)
        counts = np.array([sizes[k] for k in keys], dtype=float)
        sd = np.sqrt(np.array([scales[k] for k in keys]))
        log_weights = np.append(
            np.log(counts) + stats.norm.logpdf(eta[i], 0.0, sd), log_new_base[i]
        )
        prob = np.exp(log_weights - special.logsumexp(log_weights))
        choice = int(rng.choice(len(prob), p=prob))
        if choice == len(keys):
            label = next_label
            next_label += 1
            scales[label] = _inverse_gamma(hyper.b1 + 0.5, hyper.b2 + eta[i] ** 2 / 2, rng)
            sizes[label] = 1
        else:
            label = keys[choice]
            sizes[label] += 1
        labels[i] = label

    tau2 = np.empty(n)
    for label in sizes:
        members = labels == label
        scales[label] = _inverse_gamma(
            hyper.b1 + members.sum() / 2, hyper.b2 + float(np.sum(eta[members] ** 2)) / 2, rng
        )
        tau2[members] = scales[label]
    if sum(sizes.values()) != n:
        raise SamplerError(f"cluster sizes sum to {sum(sizes.values())}, expected {n}")

    new_labels, new_tau2 = state.labels.copy(), state.tau2.copy()
    new_labels[t], new_tau2[t] = relabel(labels), tau2
    logger.debug("DP sweep", extra={"outcome": t, "clusters": len(sizes)})
    return state.updated(labels=new_labels, tau2=new_tau2)


def update_alpha(
    alpha: float,
    cluster_count: int,
    n: int,
    hyper: Hyperparams,
    rng: np.random.Generator,
) -> float:
    """Escobar-West auxiliary-variable draw of a DP precision under Ga(c1, c2)."""
    if cluster_count < 1:
        raise SamplerError("a DP with data has at least one cluster")
    x = rng.beta(alpha + 1.0, n)
    rate = hyper.c2 - np.log(x)
    odds = (hyper.c1 + cluster_count - 1) / (n * rate)
    shape = hyper.c1 + cluster_count if rng.uniform() < odds / (1 + odds) else (
        hyper.c1 + cluster_count - 1
    )
    return float(rng.gamma(shape, 1.0 / rate))


def cluster_count(state: ModelState, t: int) -> int:
    return int(np.unique(state.labels[t]).size)
