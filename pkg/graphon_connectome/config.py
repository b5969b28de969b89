"""Engine configuration and settings."""

from pathlib import Path

from pydantic import Field, field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

_BASE_DIR = Path(__file__).resolve().parents[1]
_ENV_FILE = _BASE_DIR / ".env"


class Settings(BaseSettings):
    """Operational settings loaded from environment variables (prefix GRAPHON_)."""

    model_config = SettingsConfigDict(
        env_prefix="GRAPHON_", env_file=_ENV_FILE, env_file_encoding="utf-8"
    )

    # Logging
    log_level: str = Field(default="INFO", description="Root log level for the CLI")
    log_format: str = Field(
        default="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        description="logging.basicConfig format string",
    )

    # Workers
    threads: int = Field(
        default=1, description="Max worker processes for chains and replications"
    )

    # HMC
    leapfrog_steps: int = Field(default=10, description="Leapfrog steps per proposal")
    initial_step_size: float = Field(
        default=0.05, description="Starting leapfrog step size for every HMC block"
    )
    adapt_window: int = Field(
        default=100, description="Iterations between step-size retunes in burn-in"
    )
    accept_band_low: float = Field(
        default=0.55, description="Lower edge of the target acceptance band"
    )
    accept_band_high: float = Field(
        default=0.90, description="Upper edge of the target acceptance band"
    )
    step_shrink: float = Field(
        default=0.8, description="Step multiplier when acceptance is below band"
    )
    step_grow: float = Field(
        default=1.25, description="Step multiplier when acceptance is above band"
    )

    # Checkpointing
    checkpoint_every: int = Field(
        default=500, description="Iterations between chain checkpoints"
    )

    # Basis-size tuning
    tune_grid_min: int = Field(default=7, description="Smallest K in the AIC grid")
    tune_grid_max: int = Field(default=20, description="Largest K in the AIC grid")
    tune_latent_draws: int = Field(
        default=10, description="Latent-variable draws averaged per K"
    )
    tune_knee_threshold: float = Field(
        default=0.01,
        description="Relative AIC drop below which a larger K is not an improvement",
    )

    # IRLS
    irls_max_iter: int = Field(default=100, description="IRLS iteration cap")
    irls_tol: float = Field(
        default=1e-10, description="IRLS relative log-likelihood change at convergence"
    )
    irls_max_halvings: int = Field(
        default=30, description="Step halvings per IRLS iteration before giving up"
    )

    # Summaries
    credible_level: float = Field(
        default=0.95, description="Equal-tailed credible interval mass"
    )

    # Reproducibility
    default_seed: int = Field(default=42, description="Seed used when none is given")

    @field_validator("log_level", mode="after")
    @classmethod
    def _normalize_level(cls, value: str) -> str:
        """Accept lower-case level names."""
        return value.upper()

    @model_validator(mode="after")
    def _check_band(self) -> "Settings":
        """Ensure the acceptance band is a proper sub-interval of (0, 1)."""
        if not 0.0 < self.accept_band_low < self.accept_band_high < 1.0:
            raise ValueError("acceptance band must satisfy 0 < low < high < 1")
        return self


_settings: Settings | None = None


def get_settings() -> Settings:
    """Get engine settings singleton."""
    global _settings
    if _settings is None:
        _settings = Settings()
    return _settings
