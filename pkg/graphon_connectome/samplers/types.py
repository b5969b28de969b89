"""Type definitions for the MCMC kernels."""

from collections.abc import Callable
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from graphon_connectome.config import get_settings
from graphon_connectome.exceptions import ConfigError, SamplerError
from graphon_connectome.models import ModelState

# Log-density and its gradient at a position
ValueAndGrad = Callable[[np.ndarray], tuple[float, np.ndarray]]


class HmcConfig(BaseModel):
    """Leapfrog settings and step-size adaptation policy."""

    leapfrog_steps: int = Field(default=10, ge=1, description="Leapfrog steps per proposal")
    step_size: float = Field(default=0.05, gt=0.0, description="Initial step size")
    adapt_window: int = Field(
        default=100, ge=1, description="Iterations between step-size retunes"
    )
    target_accept_band: tuple[float, float] = Field(
        default=(0.55, 0.90), description="Acceptance band kept during burn-in"
    )
    shrink: float = Field(default=0.8, gt=0.0, lt=1.0)
    grow: float = Field(default=1.25, gt=1.0)
    precondition: bool = Field(
        default=True, description="Diagonal mass matrix on the count-side blocks"
    )

    @model_validator(mode="after")
    def _check_band(self) -> "HmcConfig":
        low, high = self.target_accept_band
        if not 0.0 < low < high < 1.0:
            raise ConfigError(f"acceptance band {self.target_accept_band} is not inside (0, 1)")
        return self

    @classmethod
    def from_settings(cls) -> "HmcConfig":
        settings = get_settings()
        return cls(
            leapfrog_steps=settings.leapfrog_steps,
            step_size=settings.initial_step_size,
            adapt_window=settings.adapt_window,
            target_accept_band=(settings.accept_band_low, settings.accept_band_high),
            shrink=settings.step_shrink,
            grow=settings.step_grow,
        )


class HmcResult(BaseModel):
    """Outcome of one Metropolis-corrected leapfrog proposal."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    position: np.ndarray
    accepted: bool
    delta_h: float = Field(description="Proposed minus current Hamiltonian; NaN if non-finite")
    log_density: float
    nonfinite: bool = False


class ChainState(BaseModel):
    """Everything needed to continue a chain exactly where it stopped."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    chain: int = 0
    iteration: int = 0
    state: ModelState
    step_sizes: dict[str, float]
    inverse_mass: dict[str, list[float]] = Field(default_factory=dict)
    window_accepted: dict[str, int] = Field(default_factory=dict)
    window_proposed: dict[str, int] = Field(default_factory=dict)
    sampling_accepted: dict[str, int] = Field(default_factory=dict)
    sampling_proposed: dict[str, int] = Field(default_factory=dict)
    rng_state: dict[str, Any] = Field(description="bit_generator.state of the chain stream")

    @model_validator(mode="after")
    def _counters(self) -> "ChainState":
        for block, accepted in self.window_accepted.items():
            if accepted > self.window_proposed.get(block, 0):
                raise SamplerError(
                    f"block {block} accepted more proposals than it made",
                    iteration=self.iteration,
                )
        for block, proposed in self.sampling_proposed.items():
            if self.sampling_accepted.get(block, 0) > proposed or proposed > self.iteration:
                raise SamplerError(
                    f"block {block} counters exceed the iteration count",
                    iteration=self.iteration,
                )
        return self

    def generator(self) -> np.random.Generator:
        """Rebuild the chain's random stream from its saved state."""
        bit_generator = np.random.PCG64()
        bit_generator.state = self.rng_state
        return np.random.Generator(bit_generator)
