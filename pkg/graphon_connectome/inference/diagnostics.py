"""Convergence diagnostics over scalar chain summaries."""

from __future__ import annotations

import logging

import numpy as np

from graphon_connectome.models import McmcRun

logger = logging.getLogger(__name__)

MONITORED = ("log_posterior", "sigma2", "alpha_length", "alpha_presence", "alpha_count")


def autocorrelation(x: np.ndarray) -> np.ndarray:
    """Normalised autocorrelation at lags 0..n-1 via zero-padded FFT."""
    x = np.asarray(x, dtype=float)
    n = x.size
    centered = x - x.mean()
    size = 1 << (2 * n - 1).bit_length()
    spectrum = np.fft.rfft(centered, size)
    acov = np.fft.irfft(spectrum * np.conj(spectrum), size)[:n]
    if acov[0] <= 0:
        return np.r_[1.0, np.zeros(n - 1)]
    return acov / acov[0]


def effective_sample_size(samples: np.ndarray) -> float:
    """ESS of one chain with Geyer's initial positive sequence truncation.

    A constant chain has no autocorrelation structure and reports its length.
    """
    x = np.asarray(samples, dtype=float)
    n = x.size
    if n < 4:
        return float(n)
    rho = autocorrelation(x)
    tau = -1.0
    for k in range(0, n - 1, 2):
        pair = rho[k] + rho[k + 1]
        if pair <= 0:
            break
        tau += 2 * pair
    tau = max(tau, 1.0 / np.log10(n))
    return float(n / tau)


def split_rhat(chains: np.ndarray) -> float:
    """Split potential scale reduction factor; ``chains`` has shape (m, n).

    Each chain is halved so a single chain is diagnosable too.
    """
    chains = np.asarray(chains, dtype=float)
    if chains.ndim == 1:
        chains = chains[None, :]
    half = chains.shape[1] // 2
    if half < 2:
        return float("nan")
    parts = np.concatenate([chains[:, :half], chains[:, -half:]])
    means = parts.mean(axis=1)
    W = parts.var(axis=1, ddof=1).mean()
    B = half * means.var(ddof=1)
    if W == 0:
        return 1.0 if B == 0 else float("inf")
    V = (half - 1) / half * W + B / half
    return float(np.sqrt(V / W))


def geweke_z(samples: np.ndarray, first: float = 0.1, last: float = 0.5) -> float:
    """Difference of early and late segment means in standard-error units."""
    x = np.asarray(samples, dtype=float)
    n = x.size
    a, b = x[: int(first * n)], x[n - int(last * n) :]
    if a.size < 4 or b.size < 4:
        return float("nan")
    var_a = a.var(ddof=1) / effective_sample_size(a)
    var_b = b.var(ddof=1) / effective_sample_size(b)
    if var_a + var_b == 0:
        return 0.0
    return float((a.mean() - b.mean()) / np.sqrt(var_a + var_b))


def _monitored(run: McmcRun) -> dict[str, np.ndarray]:
    alpha = run.draws["alpha"]
    return {
        "log_posterior": run.draws["log_posterior"],
        "sigma2": run.draws["sigma2"],
        "alpha_length": alpha[:, 0],
        "alpha_presence": alpha[:, 1],
        "alpha_count": alpha[:, 2],
    }


def with_diagnostics(run: McmcRun) -> McmcRun:
    """Run with split R-hat, ESS and Geweke z filled in per monitored scalar."""
    chain_ids = run.draws["chain"]
    chains = sorted(set(chain_ids.tolist()))
    report: dict[str, dict[str, float | None]] = {}
    for name, values in _monitored(run).items():
        per_chain = [values[chain_ids == c] for c in chains]
        length = min((len(v) for v in per_chain), default=0)
        if length < 4:
            continue
        stacked = np.stack([v[:length] for v in per_chain])
        rhat = split_rhat(stacked)
        stats = {
            "rhat": rhat,
            "ess": float(sum(effective_sample_size(v) for v in per_chain)),
            "geweke_z": geweke_z(per_chain[0]),
        }
        # JSON has no NaN or inf
        report[name] = {k: (v if np.isfinite(v) else None) for k, v in stats.items()}
        if not rhat <= 1.1:
            logger.warning(
                "Chains may not have mixed", extra={"summary": name, "rhat": rhat}
            )
    return run.model_copy(update={"diagnostics": report})
