"""Hamiltonian Monte Carlo with a fixed number of leapfrog steps."""

from __future__ import annotations

import logging

import numpy as np

from graphon_connectome.exceptions import EvaluationError, SamplerError
from graphon_connectome.models import ConnectomeDataset, Hyperparams, ModelState
from graphon_connectome.posterior import (
    HmcBlock,
    block_position,
    block_value_and_grad,
    with_block_position,
)

from .types import HmcConfig, HmcResult, ValueAndGrad

logger = logging.getLogger(__name__)


def _evaluate(value_and_grad: ValueAndGrad, q: np.ndarray) -> tuple[float, np.ndarray] | None:
    try:
        value, grad = value_and_grad(q)
    except EvaluationError as exc:
        logger.debug("density evaluation failed inside trajectory", extra={"error": str(exc)})
        return None
    if not np.isfinite(value) or not np.all(np.isfinite(grad)):
        return None
    return value, grad


def hmc_step(
    position: np.ndarray,
    value_and_grad: ValueAndGrad,
    step_size: float,
    n_steps: int,
    rng: np.random.Generator,
    inverse_mass: np.ndarray | None = None,
    block: str = "position",
) -> HmcResult:
    """One Metropolis-corrected leapfrog proposal.

    Momentum is drawn from N(0, M) with M the inverse of ``inverse_mass``
    (identity when omitted). A non-finite Hamiltonian anywhere on the
    trajectory rejects the proposal.
    """
    if step_size <= 0:
        raise SamplerError(f"step size must be positive, got {step_size}")
    q0 = np.asarray(position, dtype=float)
    inv_mass = np.ones_like(q0) if inverse_mass is None else np.asarray(inverse_mass)
    p0 = rng.standard_normal(q0.shape) / np.sqrt(inv_mass)
    # stream consumption is the same on every exit path
    log_u = np.log(rng.uniform())

    start = _evaluate(value_and_grad, q0)
    if start is None:
        logger.warning(
            "non-finite log-density at the current position",
            extra={"block": block, "step_size": step_size},
        )
        return HmcResult(
            position=q0, accepted=False, delta_h=np.nan, log_density=-np.inf, nonfinite=True
        )
    current_value, grad = start

    q, p = q0.copy(), p0 + 0.5 * step_size * grad
    end: tuple[float, np.ndarray] | None = None
    for step in range(n_steps):
        q = q + step_size * inv_mass * p
        end = _evaluate(value_and_grad, q)
        if end is None:
            break
        if step < n_steps - 1:
            p = p + step_size * end[1]
    if end is None:
        logger.warning(
            "non-finite Hamiltonian, proposal rejected",
            extra={"block": block, "step_size": step_size},
        )
        return HmcResult(
            position=q0,
            accepted=False,
            delta_h=np.nan,
            log_density=current_value,
            nonfinite=True,
        )
    proposed_value, grad = end
    p = p + 0.5 * step_size * grad

    current_h = -current_value + 0.5 * np.sum(inv_mass * p0**2)
    proposed_h = -proposed_value + 0.5 * np.sum(inv_mass * p**2)
    delta_h = float(proposed_h - current_h)
    if not np.isfinite(delta_h):
        logger.warning(
            "non-finite Hamiltonian, proposal rejected",
            extra={"block": block, "step_size": step_size},
        )
        return HmcResult(
            position=q0, accepted=False, delta_h=np.nan, log_density=current_value, nonfinite=True
        )
    if log_u < -delta_h:
        return HmcResult(position=q, accepted=True, delta_h=delta_h, log_density=proposed_value)
    return HmcResult(position=q0, accepted=False, delta_h=delta_h, log_density=current_value)


def hmc_update(
    block: HmcBlock,
    state: ModelState,
    data: ConnectomeDataset,
    hyper: Hyperparams,
    cfg: HmcConfig,
    rng: np.random.Generator,
    *,
    step_size: float | None = None,
    inverse_mass: np.ndarray | None = None,
) -> tuple[ModelState, HmcResult]:
    """HMC update of one model block; on rejection the state is returned unchanged."""

    def value_and_grad(x: np.ndarray) -> tuple[float, np.ndarray]:
        return block_value_and_grad(with_block_position(state, block, x), data, hyper, block)

    result = hmc_step(
        block_position(state, block),
        value_and_grad,
        cfg.step_size if step_size is None else step_size,
        cfg.leapfrog_steps,
        rng,
        inverse_mass=inverse_mass,
        block=block,
    )
    if not result.accepted:
        return state, result
    return with_block_position(state, block, result.position), result


def adapt_step_size(
    accept_rate: float,
    current_eps: float,
    band: tuple[float, float],
    *,
    shrink: float = 0.8,
    grow: float = 1.25,
    iteration: int | None = None,
    burn_in: int | None = None,
) -> float:
    """Shrink the step below the acceptance band, grow it above, else keep it.

    Passing ``iteration`` and ``burn_in`` asserts the call happens during
    burn-in.
    """
    if iteration is not None and burn_in is not None and iteration > burn_in:
        raise SamplerError("step-size adaptation after burn-in", iteration=iteration)
    low, high = band
    if accept_rate < low:
        return current_eps * shrink
    if accept_rate > high:
        return current_eps * grow
    return current_eps
