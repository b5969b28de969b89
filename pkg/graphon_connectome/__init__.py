"""Bayesian graphon-regularized regression for multi-subject connectomes."""

__version__ = "0.1.0"
