"""Posterior summaries, basis-size tuning, prediction and diagnostics."""

from .diagnostics import effective_sample_size, geweke_z, split_rhat, with_diagnostics
from .effects import edge_plot_data, effect_draws, summarize_effects
from .predictive import (
    check_compatible,
    draw_new_effects,
    posterior_predict,
    posterior_predictive_arrays,
)
from .tuning import choose_K, fit_at_latents, tune_basis_size

__all__ = [
    # Effects
    "edge_plot_data",
    "effect_draws",
    "summarize_effects",
    # Tuning
    "choose_K",
    "fit_at_latents",
    "tune_basis_size",
    # Prediction
    "check_compatible",
    "draw_new_effects",
    "posterior_predict",
    "posterior_predictive_arrays",
    # Diagnostics
    "effective_sample_size",
    "geweke_z",
    "split_rhat",
    "with_diagnostics",
]
