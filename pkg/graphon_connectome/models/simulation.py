"""Synthetic truths, the per-edge baseline fit and simulation-study types."""

from __future__ import annotations

from typing import Any, Literal

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from graphon_connectome.exceptions import ConfigError, SymmetryError

from .common import DEFAULT_COVARIATES, edge_index
from .evaluation import ACCURACY_COLUMNS, AccuracyCell
from .run import Schedule
from .state import Hyperparams

Method = Literal["bayes", "ancova"]


class TruthSpec(BaseModel):
    """Ground truth behind a synthetic dataset."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    J: int
    n: int
    covariate_names: list[str] = Field(default_factory=lambda: list(DEFAULT_COVARIATES))
    xi: np.ndarray
    delta: np.ndarray
    matrices: dict[str, np.ndarray] = Field(description="Family name -> J x J matrix")
    sigma_true: float
    eta: np.ndarray = Field(description="True subject random effects, shape (3, n)")
    inflation: np.ndarray = Field(description="Realised zero-inflation draws, (n, E)")

    @model_validator(mode="after")
    def _symmetric(self) -> TruthSpec:
        for name, mat in self.matrices.items():
            if mat.shape != (self.J, self.J) or not np.array_equal(mat, mat.T):
                raise SymmetryError(f"truth matrix {name} is not a symmetric J x J array")
        return self

    def edge_values(self, family: str) -> np.ndarray:
        rows, cols = edge_index(self.J)
        return self.matrices[family][rows, cols]


class AncovaFit(BaseModel):
    """Independent per-edge regressions; NaN marks a failed or missing estimate."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    J: int
    region_names: list[str] = Field(default_factory=list)
    self_edges: bool = False
    covariate_names: list[str]
    estimates: dict[str, np.ndarray] = Field(description="Family name -> (E,) estimates")
    converged: dict[str, np.ndarray] = Field(description="Outcome name -> (E,) flags")
    fallback: dict[str, np.ndarray] = Field(
        description="Outcome name -> (E,) smoothed intercept used when a fit is missing"
    )
    sigma2: float = Field(description="Pooled residual variance of the length fits")

    def matrix(self, family: str) -> np.ndarray:
        """Estimates of one family as a symmetric J x J array, NaN where missing."""
        rows, cols = edge_index(self.J, self.self_edges)
        mat = np.full((self.J, self.J), np.nan)
        mat[rows, cols] = self.estimates[family]
        mat[cols, rows] = self.estimates[family]
        return mat

    def missing(self, family: str) -> np.ndarray:
        return np.isnan(self.estimates[family])


class StudyConfig(BaseModel):
    """Simulation study over sample sizes and replications."""

    J: int = Field(default=20, ge=2)
    n_list: list[int] = Field(default_factory=lambda: [500])
    replications: int = Field(default=5, ge=1)
    methods: list[Method] = Field(default_factory=lambda: ["bayes", "ancova"])
    seed: int = 42
    hyper: Hyperparams = Field(
        default_factory=lambda: Hyperparams(random_effects=False),
        description="Fitted-model hyperparameters; the study disables random effects",
    )
    schedule: Schedule = Field(
        default_factory=lambda: Schedule(burn_in=1000, samples=1000)
    )
    sigma_true: float = Field(default=0.5, ge=0.0)
    random_effect_sd: float = Field(default=0.0, ge=0.0)
    train_fraction: float = Field(default=0.5, gt=0.0, lt=1.0)
    threads: int | None = Field(default=None, ge=1)

    @field_validator("n_list")
    @classmethod
    def _sizes(cls, value: list[int]) -> list[int]:
        if not value or min(value) < 2:
            raise ConfigError("n_list must be non-empty with every n >= 2")
        return value

    @field_validator("methods")
    @classmethod
    def _methods(cls, value: list[Method]) -> list[Method]:
        if not value:
            raise ConfigError("at least one method is required")
        return list(dict.fromkeys(value))


class PredictionRow(BaseModel):
    n: int
    replication: int
    method: Method
    length_mse: float
    count_mean_loglik: float


class StudyReport(BaseModel):
    """Aggregated accuracy cells per sample size and per-replication prediction rows."""

    config: StudyConfig
    accuracy: dict[int, list[AccuracyCell]] = Field(default_factory=dict)
    prediction: list[PredictionRow] = Field(default_factory=list)

    def accuracy_frame(self, n: int) -> pd.DataFrame:
        rows = [cell.model_dump(include=set(ACCURACY_COLUMNS)) for cell in self.accuracy[n]]
        return pd.DataFrame(rows, columns=list(ACCURACY_COLUMNS))

    def prediction_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [row.model_dump() for row in self.prediction],
            columns=["n", "replication", "method", "length_mse", "count_mean_loglik"],
        )

    def to_markdown(self) -> str:
        """Accuracy tables (x 1e-2) and mean prediction scores per method."""
        lines: list[str] = ["# Simulation study", ""]
        for n in sorted(self.accuracy):
            lines += [f"## Estimation accuracy, n = {n} (x 1e-2)", ""]
            frame = self.accuracy_frame(n)
            methods = list(dict.fromkeys(frame["method"]))
            header = "| family | " + " | ".join(
                f"{m} bias2 | {m} var | {m} mse" for m in methods
            ) + " |"
            lines += [header, "|" + "---|" * (1 + 3 * len(methods))]
            for family in dict.fromkeys(frame["family"]):
                cells: list[Any] = [family]
                for m in methods:
                    sub = frame[(frame["family"] == family) & (frame["method"] == m)]
                    if sub.empty:
                        cells += ["", "", ""]
                    else:
                        r = sub.iloc[0]
                        cells += [
                            f"{100 * r['bias2']:.3f}",
                            f"{100 * r['variance']:.3f}",
                            f"{100 * r['mse']:.3f}",
                        ]
                lines.append("| " + " | ".join(str(c) for c in cells) + " |")
            lines.append("")
        if self.prediction:
            lines += ["## Prediction (mean over replications)", ""]
            lines += ["| n | method | length MSE | count mean log-lik |", "|---|---|---|---|"]
            frame = self.prediction_frame()
            grouped = frame.groupby(["n", "method"], sort=True)[
                ["length_mse", "count_mean_loglik"]
            ].mean()
            for (n, method), r in grouped.iterrows():
                lines.append(
                    f"| {n} | {method} | {r['length_mse']:.4f} | {r['count_mean_loglik']:.2f} |"
                )
            lines.append("")
        return "\n".join(lines)
