"""Synthetic data, the ANCOVA baseline and the simulation study."""

from .ancova import ancova_fit, ancova_predict, ancova_predictors, smoothed_intercepts
from .study import CellResult, aggregate, run_cell, run_study, split_halves
from .truth import (
    generate_dataset,
    generate_truth,
    sample_covariates,
    symmetric_truth,
    truth_predictors,
)

__all__ = [
    # Truth
    "generate_dataset",
    "generate_truth",
    "sample_covariates",
    "symmetric_truth",
    "truth_predictors",
    # Baseline
    "ancova_fit",
    "ancova_predict",
    "ancova_predictors",
    "smoothed_intercepts",
    # Study
    "CellResult",
    "aggregate",
    "run_cell",
    "run_study",
    "split_halves",
]
