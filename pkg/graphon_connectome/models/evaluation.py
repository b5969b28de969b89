"""Estimation-accuracy and prediction score types."""

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from graphon_connectome.exceptions import SummaryError

ACCURACY_COLUMNS: tuple[str, ...] = (
    "family",
    "method",
    "bias2",
    "variance",
    "mse",
    "n_entries",
)


class AccuracyCell(BaseModel):
    """Entry-averaged bias squared, variance and MSE of one effect family."""

    family: str = ""
    method: str = ""
    bias2: float
    variance: float
    mse: float
    n_entries: int = Field(description="Entries with at least two present replications")

    @model_validator(mode="after")
    def _decomposition(self) -> "AccuracyCell":
        if abs(self.mse - (self.bias2 + self.variance)) > 1e-10 * max(1.0, abs(self.mse)):
            raise SummaryError("mse must equal bias2 + variance")
        return self


class PredictionScores(BaseModel):
    """Held-out prediction scores."""

    length_mse: float = Field(description="Mean squared error of held-out log lengths")
    count_mean_loglik: float = Field(
        description="Mean over held-out subjects of the zero-inflated count log-likelihood"
    )
    n_subjects: int
    n_length_edges: int


class EdgePredictions(BaseModel):
    """Per-entry predictions for held-out subjects, shaped (n, E)."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    mu: np.ndarray = Field(description="Predicted log mean length")
    count_loglik: np.ndarray = Field(
        description="Predictive log-probability of the observed count"
    )
    method: str = ""

    @model_validator(mode="after")
    def _shapes(self) -> "EdgePredictions":
        if self.mu.shape != self.count_loglik.shape:
            raise SummaryError("prediction arrays must share one (n, E) shape")
        return self
