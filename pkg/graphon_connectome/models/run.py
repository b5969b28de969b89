"""MCMC schedules, traces, completed runs and run configuration."""

from __future__ import annotations

import json
from pathlib import Path
from typing import IO, Any, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from graphon_connectome.exceptions import ConfigError, SummaryError

from .common import LatentPrior
from .state import Hyperparams, ModelState

DRAW_KEYS: tuple[str, ...] = (
    "theta",
    "gamma",
    "xi",
    "delta",
    "indicator",
    "eta",
    "tau2",
    "labels",
    "alpha",
    "sigma2",
    "log_posterior",
    "chain",
)


class Schedule(BaseModel):
    """Iteration schedule of a chain."""

    burn_in: int = Field(default=5000, ge=0, description="Discarded warm-up iterations")
    samples: int = Field(default=5000, ge=0, description="Post burn-in iterations")
    thin: int = Field(default=1, ge=1, description="Keep every thin-th iteration")
    chains: int = Field(default=1, ge=1, description="Independent chains")
    seed: int = Field(default=42, description="Root seed for all chains")

    @property
    def kept(self) -> int:
        return self.samples // self.thin


class TraceRecord(BaseModel):
    """Acceptance and step size of one HMC block over one adaptation window."""

    chain: int = 0
    iteration: int
    block: str
    acceptance: float
    step_size: float
    log_posterior: float | None = Field(
        default=None, description="Log posterior at window close, None when off support"
    )
    phase: Literal["burn_in", "sampling"]


def empty_draws(P: int, d: int, J: int, n: int) -> dict[str, np.ndarray]:
    """Zero-length draw arrays with the trailing shapes of a chain."""
    return {
        "theta": np.zeros((0, 3, P)),
        "gamma": np.zeros((0, 3, d, P)),
        "xi": np.zeros((0, J)),
        "delta": np.zeros((0, J)),
        "indicator": np.zeros((0, J), dtype=np.int64),
        "eta": np.zeros((0, 3, n)),
        "tau2": np.zeros((0, 3, n)),
        "labels": np.zeros((0, 3, n), dtype=np.int64),
        "alpha": np.zeros((0, 3)),
        "sigma2": np.zeros(0),
        "log_posterior": np.zeros(0),
        "chain": np.zeros(0, dtype=np.int64),
    }


def stack_draws(states: list[ModelState], log_posts: list[float], chain: int) -> dict[str, np.ndarray]:
    """Stack kept states into draw arrays."""
    if not states:
        raise SummaryError("no states to stack")
    return {
        "theta": np.stack([s.theta for s in states]),
        "gamma": np.stack([s.gamma for s in states]),
        "xi": np.stack([s.xi for s in states]),
        "delta": np.stack([s.delta for s in states]),
        "indicator": np.stack([s.indicator for s in states]),
        "eta": np.stack([s.eta for s in states]),
        "tau2": np.stack([s.tau2 for s in states]),
        "labels": np.stack([s.labels for s in states]),
        "alpha": np.stack([s.alpha for s in states]),
        "sigma2": np.array([s.sigma2 for s in states]),
        "log_posterior": np.asarray(log_posts, dtype=float),
        "chain": np.full(len(states), chain, dtype=np.int64),
    }


class McmcRun(BaseModel):
    """Posterior draws of one or more chains with their tuning history."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    hyper: Hyperparams
    schedule: Schedule
    region_names: list[str]
    covariate_names: list[str]
    subject_ids: list[str] = Field(default_factory=list)
    self_edges: bool = False
    age_center: float = 0.0
    draws: dict[str, np.ndarray] = Field(description="Kept draws, leading axis = sample")
    trace: list[TraceRecord] = Field(default_factory=list)
    acceptance: dict[str, float] = Field(
        default_factory=dict, description="Post burn-in acceptance rate per HMC block"
    )
    step_sizes: dict[str, float] = Field(default_factory=dict)
    diagnostics: dict[str, dict[str, float | None]] = Field(
        default_factory=dict, description="Split R-hat and ESS per scalar summary"
    )
    final_state: ModelState

    @field_validator("draws")
    @classmethod
    def _all_keys(cls, value: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
        missing = [k for k in DRAW_KEYS if k not in value]
        if missing:
            raise ConfigError(f"run is missing draw arrays: {missing}")
        return {k: np.asarray(value[k]) for k in DRAW_KEYS}

    @property
    def n_samples(self) -> int:
        return int(self.draws["sigma2"].shape[0])

    @property
    def J(self) -> int:
        return len(self.region_names)

    def state_at(self, s: int) -> ModelState:
        """Model state of kept draw s."""
        return self.final_state.updated(
            theta=self.draws["theta"][s],
            gamma=self.draws["gamma"][s],
            xi=self.draws["xi"][s],
            delta=self.draws["delta"][s],
            indicator=self.draws["indicator"][s],
            eta=self.draws["eta"][s],
            tau2=self.draws["tau2"][s],
            labels=self.draws["labels"][s],
            alpha=self.draws["alpha"][s],
            sigma2=float(self.draws["sigma2"][s]),
        )

    def save(self, handle: IO[bytes]) -> None:
        """Write draws and JSON metadata to a compressed npz stream."""
        metadata = self.model_dump_json(exclude={"draws"})
        np.savez_compressed(handle, metadata=np.array(metadata), **self.draws)

    @classmethod
    def load(cls, path: Path) -> McmcRun:
        with np.load(path, allow_pickle=False) as archive:
            data: dict[str, Any] = json.loads(str(archive["metadata"]))
            data["draws"] = {k: archive[k] for k in DRAW_KEYS}
        return cls.model_validate(data)

    @classmethod
    def combine(cls, runs: list[McmcRun]) -> McmcRun:
        """Concatenate chains that share data and configuration."""
        if not runs:
            raise SummaryError("no runs to combine")
        first = runs[0]
        draws = {k: np.concatenate([r.draws[k] for r in runs]) for k in DRAW_KEYS}
        trace = [rec for r in runs for rec in r.trace]
        totals: dict[str, list[float]] = {}
        for r in runs:
            for block, rate in r.acceptance.items():
                totals.setdefault(block, []).append(rate)
        return first.model_copy(
            update={
                "draws": draws,
                "trace": trace,
                "acceptance": {b: float(np.mean(v)) for b, v in totals.items()},
                "schedule": first.schedule.model_copy(update={"chains": len(runs)}),
            }
        )


class RunConfig(BaseModel):
    """Configuration of one CLI invocation, loaded from YAML and flags."""

    command: Literal["fit", "tune", "summarize", "predict"] = "fit"
    edges: Path | None = Field(default=None, description="Edge CSV")
    covariates: Path | None = Field(default=None, description="Covariate CSV")
    output_dir: Path = Field(default=Path("out"), description="Artifact directory")
    checkpoint: Path | None = Field(
        default=None, description="Existing posterior file for summarize / predict"
    )
    heldout_edges: Path | None = None
    heldout_covariates: Path | None = None
    K: int | Literal["auto"] = Field(
        default="auto", description="Basis size, or 'auto' to run AIC tuning first"
    )
    hyper: Hyperparams = Field(default_factory=Hyperparams)
    schedule: Schedule = Field(default_factory=Schedule)
    self_edges: bool = False
    latent_prior: LatentPrior = LatentPrior.beta_mixture
    tune_grid: list[int] | None = Field(
        default=None, description="Candidate K values; settings range when omitted"
    )
    top: int | None = Field(default=None, ge=1, description="Keep only the top ranked edges")
    threads: int | None = Field(default=None, ge=1)
    resume: bool = Field(default=False, description="Continue from the latest checkpoint")

    @field_validator("tune_grid")
    @classmethod
    def _grid(cls, value: list[int] | None) -> list[int] | None:
        if value is not None and (not value or min(value) < 4):
            raise ConfigError("tune grid must be non-empty with every K >= 4")
        return value

    def resolved_hyper(self, K: int | None = None) -> Hyperparams:
        """Hyperparameters with the basis size and latent prior applied."""
        size = K if K is not None else (self.hyper.K if self.K == "auto" else self.K)
        return self.hyper.model_copy(update={"K": size, "latent_prior": self.latent_prior})
