"""MCMC kernels and the chain driver."""

from .chain import (
    ChainRunner,
    Checkpoint,
    chain_rng,
    hmc_blocks,
    initial_state,
    resume_chain,
    run_chain,
    run_chains,
)
from .dp import dp_scale_update, log_marginal_effect, update_alpha
from .gibbs import (
    albert_chib_draw,
    draw_zero_inflation,
    flip_indicators,
    gibbs_conjugate_normal_block,
    gibbs_random_effects,
    gibbs_sigma2,
    zero_inflation_probability,
)
from .hmc import adapt_step_size, hmc_step, hmc_update
from .prior import draw_observations, sample_prior, simulate_observations
from .telemetry import SamplerMetrics
from .types import ChainState, HmcConfig, HmcResult

__all__ = [
    # Chain
    "ChainRunner",
    "ChainState",
    "Checkpoint",
    "chain_rng",
    "hmc_blocks",
    "initial_state",
    "resume_chain",
    "run_chain",
    "run_chains",
    # HMC
    "HmcConfig",
    "HmcResult",
    "adapt_step_size",
    "hmc_step",
    "hmc_update",
    # Gibbs
    "albert_chib_draw",
    "draw_zero_inflation",
    "flip_indicators",
    "gibbs_conjugate_normal_block",
    "gibbs_random_effects",
    "gibbs_sigma2",
    "zero_inflation_probability",
    # DP
    "dp_scale_update",
    "log_marginal_effect",
    "update_alpha",
    # Prior simulation
    "draw_observations",
    "sample_prior",
    "simulate_observations",
    # Telemetry
    "SamplerMetrics",
]
