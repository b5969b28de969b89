"""Edge-effect summaries: credible intervals, significance and ranking."""

from __future__ import annotations

import logging
from typing import Any

import numpy as np
import pandas as pd

from graphon_connectome.config import get_settings
from graphon_connectome.exceptions import SummaryError
from graphon_connectome.models import (
    EffectSummary,
    McmcRun,
    edge_index,
    family_names,
)
from graphon_connectome.splines import basis_matrix, graphon_matrix

logger = logging.getLogger(__name__)


def effect_draws(run: McmcRun) -> np.ndarray:
    """Per-draw edge values of every family; shape (families, samples, edges).

    Families follow ``family_names(run.covariate_names)``.
    """
    basis = run.final_state.basis
    rows, cols = edge_index(run.J, run.self_edges)
    theta, gamma = run.draws["theta"], run.draws["gamma"]
    xi, delta = run.draws["xi"], run.draws["delta"]
    d = gamma.shape[2]
    S = run.n_samples
    out = np.empty((3 + 3 * d, S, rows.size))
    for s in range(S):
        B_xi = basis_matrix(xi[s], basis)
        B_delta = basis_matrix(delta[s], basis)
        for t in range(3):
            out[t, s] = graphon_matrix(theta[s, t], B_xi)[rows, cols]
            for l in range(d):
                out[3 + t * d + l, s] = graphon_matrix(gamma[s, t, l], B_delta)[rows, cols]
    return out


def _rank(tail_prob: np.ndarray, interval_len: np.ndarray) -> np.ndarray:
    """1-based rank: larger tail probability first, then shorter interval, then edge order."""
    order = np.lexsort((np.arange(tail_prob.size), interval_len, -tail_prob))
    rank = np.empty(tail_prob.size, dtype=np.int64)
    rank[order] = np.arange(1, tail_prob.size + 1)
    return rank


def summarize_effects(
    run: McmcRun, credible_level: float | None = None, top: int | None = None
) -> EffectSummary:
    """Posterior mean, equal-tailed interval, tail probability and rank per family and edge."""
    if run.n_samples < 2:
        raise SummaryError(f"need at least 2 posterior samples, got {run.n_samples}")
    level = credible_level if credible_level is not None else get_settings().credible_level
    if not 0.0 < level < 1.0:
        raise SummaryError(f"credible level must lie in (0, 1), got {level}")

    names = family_names(run.covariate_names)
    values = effect_draws(run)
    rows, cols = edge_index(run.J, run.self_edges)
    region_a = [run.region_names[j] for j in rows]
    region_b = [run.region_names[k] for k in cols]
    tail = (1.0 - level) / 2

    frames = []
    for f, family in enumerate(names):
        draws = values[f]
        lo, hi = np.quantile(draws, [tail, 1.0 - tail], axis=0, method="linear")
        tail_prob = np.maximum((draws > 0).mean(axis=0), (draws < 0).mean(axis=0))
        interval_len = hi - lo
        frames.append(
            pd.DataFrame(
                {
                    "family": family,
                    "region_a": region_a,
                    "region_b": region_b,
                    "mean": draws.mean(axis=0),
                    "lo": lo,
                    "hi": hi,
                    "tail_prob": tail_prob,
                    "interval_len": interval_len,
                    "significant": (lo > 0) | (hi < 0),
                    "rank": _rank(tail_prob, interval_len),
                }
            )
        )
    table = pd.concat(frames, ignore_index=True)
    logger.info(
        "Summarized edge effects",
        extra={
            "families": len(names),
            "edges": rows.size,
            "samples": run.n_samples,
            "significant": int(table["significant"].sum()),
        },
    )
    summary = EffectSummary(table=table, credible_level=level, n_samples=run.n_samples)
    return summary.top(top) if top is not None else summary


def edge_plot_data(summary: EffectSummary, region_names: list[str]) -> dict[str, Any]:
    """Ring layout of the regions plus the significant edges of every family."""
    J = len(region_names)
    angles = 2 * np.pi * np.arange(J) / max(J, 1)
    nodes = [
        {
            "name": name,
            "angle": float(angles[j]),
            "x": float(np.cos(angles[j])),
            "y": float(np.sin(angles[j])),
        }
        for j, name in enumerate(region_names)
    ]
    significant = summary.significant().sort_values(["family", "rank"])
    edges = [
        {
            "family": row.family,
            "source": row.region_a,
            "target": row.region_b,
            "mean": float(row.mean),
            "tail_prob": float(row.tail_prob),
            "rank": int(row.rank),
        }
        for row in significant.itertuples(index=False)
    ]
    return {"credible_level": summary.credible_level, "nodes": nodes, "edges": edges}
