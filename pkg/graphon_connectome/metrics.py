"""Estimation-accuracy and held-out prediction metrics.

Missing estimates are NaN and are skipped entry by entry: an entry enters the
averages only when at least two replications estimated it.
"""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np

from graphon_connectome.exceptions import SummaryError
from graphon_connectome.models import (
    AccuracyCell,
    ConnectomeDataset,
    EdgePredictions,
    PredictionScores,
)


def accuracy(
    estimates: Sequence[np.ndarray] | np.ndarray,
    truth: np.ndarray,
    *,
    family: str = "",
    method: str = "",
) -> AccuracyCell:
    """Entry-averaged bias squared, sample variance and MSE over replications."""
    stacked = np.stack([np.asarray(e, dtype=float) for e in estimates])
    truth = np.asarray(truth, dtype=float)
    if stacked.shape[1:] != truth.shape:
        raise SummaryError(
            f"estimate shape {stacked.shape[1:]} does not match truth shape {truth.shape}"
        )
    present = np.isfinite(stacked)
    counts = present.sum(axis=0)
    usable = counts >= 2
    if not np.any(usable):
        raise SummaryError(
            f"no entry has two present replications (family={family!r}, method={method!r})"
        )
    values = np.where(present, stacked, 0.0)
    safe = np.where(usable, counts, 2)
    mean = values.sum(axis=0) / safe
    sq_dev = np.where(present, (stacked - mean) ** 2, 0.0).sum(axis=0)
    variance = (sq_dev / (safe - 1))[usable]
    bias2 = ((mean - truth) ** 2)[usable]
    b, v = float(bias2.mean()), float(variance.mean())
    return AccuracyCell(
        family=family,
        method=method,
        bias2=b,
        variance=v,
        mse=b + v,
        n_entries=int(usable.sum()),
    )


def prediction_metrics(
    predictions: EdgePredictions, heldout: ConnectomeDataset
) -> PredictionScores:
    """Length MSE over connected held-out edges and mean per-subject count log-likelihood."""
    if heldout.n == 0:
        raise SummaryError("held-out set is empty")
    if predictions.mu.shape != heldout.counts.shape:
        raise SummaryError(
            f"prediction shape {predictions.mu.shape} does not match held-out "
            f"{heldout.counts.shape}"
        )
    observed = heldout.observed
    if not np.any(observed):
        raise SummaryError("held-out set has no connected edges for the length metric")
    resid = heldout.log_lengths[observed] - predictions.mu[observed]
    per_subject = predictions.count_loglik.sum(axis=1)
    return PredictionScores(
        length_mse=float(np.mean(resid**2)),
        count_mean_loglik=float(np.mean(per_subject)),
        n_subjects=heldout.n,
        n_length_edges=int(observed.sum()),
    )
