"""Posterior summaries: edge effects and basis-size tuning reports."""

from __future__ import annotations

from io import StringIO
from typing import Literal

import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, model_validator

from graphon_connectome.exceptions import SummaryError

EFFECT_COLUMNS: tuple[str, ...] = (
    "family",
    "region_a",
    "region_b",
    "mean",
    "lo",
    "hi",
    "tail_prob",
    "interval_len",
    "significant",
    "rank",
)


class EffectSummary(BaseModel):
    """Per-family, per-edge posterior effect summaries.

    ``table`` has one row per (family, edge) with the columns of
    ``EFFECT_COLUMNS``; ``rank`` restarts at 1 within each family. Intervals
    are equal-tailed quantiles, so ``lo <= hi`` always holds but a strongly
    skewed posterior can put ``mean`` outside ``[lo, hi]``.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    table: pd.DataFrame
    credible_level: float = 0.95
    n_samples: int

    @model_validator(mode="after")
    def _columns(self) -> EffectSummary:
        missing = [c for c in EFFECT_COLUMNS if c not in self.table.columns]
        if missing:
            raise SummaryError(f"effect table missing columns {missing}")
        if (self.table["lo"] > self.table["hi"]).any():
            raise SummaryError("credible interval with lo > hi")
        return self

    def family(self, name: str) -> pd.DataFrame:
        return self.table[self.table["family"] == name].sort_values("rank")

    def significant(self) -> pd.DataFrame:
        return self.table[self.table["significant"]]

    def top(self, count: int) -> EffectSummary:
        """Keep the ``count`` best-ranked edges of every family."""
        kept = self.table[self.table["rank"] <= count].reset_index(drop=True)
        return self.model_copy(update={"table": kept})

    def to_csv(self) -> str:
        return self.table.to_csv(
            columns=list(EFFECT_COLUMNS), index=False, float_format="%.17g"
        )

    @classmethod
    def from_csv(cls, text: str, credible_level: float, n_samples: int) -> EffectSummary:
        """Parse the output of ``to_csv``."""
        table = pd.read_csv(
            StringIO(text), dtype={"family": str, "region_a": str, "region_b": str}
        )
        table["significant"] = table["significant"].astype(bool)
        return cls(table=table, credible_level=credible_level, n_samples=n_samples)


class TuneEntry(BaseModel):
    """AIC of one candidate basis size."""

    K: int
    aic_mean: float | None = Field(description="Mean AIC over converged latent draws")
    aic_draws: list[float | None] = Field(description="Per-draw AIC; None if dropped")
    n_valid: int


class TuneReport(BaseModel):
    """Outcome of the AIC grid search over K."""

    entries: list[TuneEntry]
    chosen_K: int
    rule: Literal["argmin", "knee"] = "knee"
    threshold: float = 0.01

    @model_validator(mode="after")
    def _chosen_in_grid(self) -> TuneReport:
        if self.chosen_K not in [e.K for e in self.entries]:
            raise SummaryError(f"chosen K={self.chosen_K} is not in the grid")
        return self

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "K": [e.K for e in self.entries],
                "aic_mean": [e.aic_mean for e in self.entries],
                "n_valid": [e.n_valid for e in self.entries],
                "chosen": [e.K == self.chosen_K for e in self.entries],
            }
        )
