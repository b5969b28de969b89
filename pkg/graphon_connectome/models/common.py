"""Common enums, family naming and array helpers used across the engine."""

from __future__ import annotations

from collections.abc import Sequence
from enum import Enum
from typing import Any

import numpy as np


class Outcome(str, Enum):
    """The three edge-level regressions; the order fixes array index t."""

    length = "length"
    presence = "presence"
    count = "count"

    @property
    def index(self) -> int:
        return _OUTCOME_ORDER.index(self)


_OUTCOME_ORDER = [Outcome.length, Outcome.presence, Outcome.count]
OUTCOMES: tuple[Outcome, ...] = tuple(_OUTCOME_ORDER)


class LatentPrior(str, Enum):
    """Prior family for the covariate-effect latents delta."""

    beta_mixture = "beta_mixture"
    logit_normal = "logit_normal"


DEFAULT_COVARIATES: tuple[str, ...] = ("mci", "ad", "male", "age")

BASELINE_NAMES = {
    Outcome.length: "mu0",
    Outcome.presence: "pi0",
    Outcome.count: "lambda0",
}
EFFECT_PREFIXES = {
    Outcome.length: "chi",
    Outcome.presence: "beta",
    Outcome.count: "nu",
}


def family_names(covariate_names: Sequence[str]) -> list[str]:
    """Names of all effect families: three baselines, then effects by outcome."""
    names = [BASELINE_NAMES[o] for o in OUTCOMES]
    for outcome in OUTCOMES:
        names.extend(f"{EFFECT_PREFIXES[outcome]}_{c}" for c in covariate_names)
    return names


def covariate_family_names(covariate_names: Sequence[str]) -> list[str]:
    """Names of the covariate-effect families only."""
    return family_names(covariate_names)[len(OUTCOMES) :]


def parse_family(name: str, covariate_names: Sequence[str]) -> tuple[int, int | None]:
    """Map a family name to (outcome index, covariate index or None)."""
    for outcome in OUTCOMES:
        if name == BASELINE_NAMES[outcome]:
            return outcome.index, None
        prefix = EFFECT_PREFIXES[outcome] + "_"
        if name.startswith(prefix) and name[len(prefix) :] in covariate_names:
            return outcome.index, list(covariate_names).index(name[len(prefix) :])
    raise KeyError(f"unknown effect family {name!r}")


def edge_index(J: int, self_edges: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Row/column node indices of the modelled edges (upper triangle)."""
    return np.triu_indices(J, k=0 if self_edges else 1)


def as_float_array(value: Any) -> np.ndarray:
    return np.asarray(value, dtype=float)


def as_int_array(value: Any) -> np.ndarray:
    return np.asarray(value, dtype=np.int64)
