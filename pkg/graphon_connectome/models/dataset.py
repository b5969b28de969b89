"""Multi-subject connectome observations."""

from __future__ import annotations

from collections.abc import Sequence
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from graphon_connectome.exceptions import DatasetError

from .common import DEFAULT_COVARIATES, as_float_array, edge_index


class ConnectomeDataset(BaseModel):
    """Edge counts and mean fibre lengths per subject, with covariate rows.

    Edges are stored once per unordered region pair in upper-triangle order
    (``numpy.triu_indices``), which makes the count array symmetric by
    construction. ``lengths`` holds NaN exactly where the count is zero.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    subject_ids: list[str] = Field(description="Subject identifiers, length n")
    region_names: list[str] = Field(description="Region labels, length J")
    covariate_names: list[str] = Field(default_factory=lambda: list(DEFAULT_COVARIATES))
    counts: np.ndarray = Field(description="Fibre counts, shape (n, E)")
    lengths: np.ndarray = Field(description="Mean fibre lengths, NaN where count is 0")
    covariates: np.ndarray = Field(description="Covariate rows Z_i, shape (n, d)")
    self_edges: bool = Field(default=False, description="Whether (j, j) edges are modelled")
    age_center: float = Field(default=0.0, description="Mean age removed at ingestion")

    @field_validator("counts", mode="before")
    @classmethod
    def _counts_array(cls, value: Any) -> np.ndarray:
        arr = np.asarray(value)
        if arr.size and not np.all(np.isfinite(arr.astype(float))):
            raise DatasetError("counts must be finite")
        if arr.size and np.any(arr.astype(float) != np.round(arr.astype(float))):
            raise DatasetError("counts must be integers")
        return arr.astype(np.int64)

    @field_validator("lengths", "covariates", mode="before")
    @classmethod
    def _float_array(cls, value: Any) -> np.ndarray:
        return as_float_array(value)

    @model_validator(mode="after")
    def _check_invariants(self) -> ConnectomeDataset:
        """Enforce shapes, non-negative counts, and lengths present iff count >= 1."""
        n, J, d = len(self.subject_ids), len(self.region_names), len(self.covariate_names)
        E = len(edge_index(J, self.self_edges)[0])
        if len(set(self.subject_ids)) != n:
            raise DatasetError("subject identifiers must be unique")
        if len(set(self.region_names)) != J:
            raise DatasetError("region names must be unique")
        if self.counts.shape != (n, E):
            raise DatasetError(f"counts shape {self.counts.shape}, expected {(n, E)}")
        if self.lengths.shape != (n, E):
            raise DatasetError(f"lengths shape {self.lengths.shape}, expected {(n, E)}")
        if self.covariates.shape != (n, d):
            raise DatasetError(
                f"covariates shape {self.covariates.shape}, expected {(n, d)}"
            )
        if n == 0:
            return self

        negative = np.argwhere(self.counts < 0)
        if negative.size:
            i, e = negative[0]
            raise DatasetError(
                "negative fibre count", subject=self.subject_ids[i], edge=self.edge_names(e)
            )
        present = np.isfinite(self.lengths)
        mismatch = np.argwhere(present != (self.counts >= 1))
        if mismatch.size:
            i, e = mismatch[0]
            what = (
                "mean length missing for connected edge"
                if self.counts[i, e] >= 1
                else "mean length given for edge with zero count"
            )
            raise DatasetError(what, subject=self.subject_ids[i], edge=self.edge_names(e))
        nonpositive = np.argwhere(present & ~(np.where(present, self.lengths, 1.0) > 0))
        if nonpositive.size:
            i, e = nonpositive[0]
            raise DatasetError(
                "mean length must be positive",
                subject=self.subject_ids[i],
                edge=self.edge_names(e),
            )
        bad_rows = np.flatnonzero(~np.all(np.isfinite(self.covariates), axis=1))
        if bad_rows.size:
            raise DatasetError(
                "missing covariate values", subject=self.subject_ids[bad_rows[0]]
            )
        return self

    @property
    def n(self) -> int:
        return len(self.subject_ids)

    @property
    def J(self) -> int:
        return len(self.region_names)

    @property
    def d(self) -> int:
        return len(self.covariate_names)

    @property
    def E(self) -> int:
        return self.counts.shape[1]

    @property
    def rows(self) -> np.ndarray:
        return edge_index(self.J, self.self_edges)[0]

    @property
    def cols(self) -> np.ndarray:
        return edge_index(self.J, self.self_edges)[1]

    @property
    def observed(self) -> np.ndarray:
        """Mask of edges with at least one fibre."""
        return self.counts >= 1

    @property
    def log_lengths(self) -> np.ndarray:
        """Natural log of mean lengths; NaN where no fibre exists."""
        with np.errstate(invalid="ignore"):
            return np.log(self.lengths)

    def edge_names(self, e: int) -> tuple[str, str]:
        return self.region_names[self.rows[e]], self.region_names[self.cols[e]]

    def edge_position(self, j: int, k: int) -> int:
        """Column of edge (j, k) in the edge arrays, in either orientation."""
        a, b = min(j, k), max(j, k)
        if a == b and not self.self_edges:
            raise IndexError(f"self-edge ({j}, {k}) is not modelled")
        if a < 0 or b >= self.J:
            raise IndexError(f"edge ({j}, {k}) out of range for J={self.J}")
        hits = np.flatnonzero((self.rows == a) & (self.cols == b))
        return int(hits[0])

    def subset(self, indices: Sequence[int]) -> ConnectomeDataset:
        """Dataset restricted to the given subjects, in the given order."""
        idx = np.asarray(indices, dtype=int)
        return ConnectomeDataset(
            subject_ids=[self.subject_ids[i] for i in idx],
            region_names=list(self.region_names),
            covariate_names=list(self.covariate_names),
            counts=self.counts[idx],
            lengths=self.lengths[idx],
            covariates=self.covariates[idx],
            self_edges=self.self_edges,
            age_center=self.age_center,
        )

    @classmethod
    def empty(
        cls,
        region_names: Sequence[str],
        covariate_names: Sequence[str] = DEFAULT_COVARIATES,
        self_edges: bool = False,
    ) -> ConnectomeDataset:
        """Dataset with no subjects over the given regions."""
        E = len(edge_index(len(region_names), self_edges)[0])
        return cls(
            subject_ids=[],
            region_names=list(region_names),
            covariate_names=list(covariate_names),
            counts=np.zeros((0, E), dtype=np.int64),
            lengths=np.zeros((0, E)),
            covariates=np.zeros((0, len(covariate_names))),
            self_edges=self_edges,
        )
