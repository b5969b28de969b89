"""Parameter state and hyperparameters of the graphon regression model."""

from __future__ import annotations

from typing import Any

import numpy as np
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    field_serializer,
    field_validator,
    model_validator,
)

from graphon_connectome.exceptions import ConfigError, SymmetryError
from graphon_connectome.splines import BasisConfig, SymmetricCoeffMatrix

from .common import LatentPrior, as_float_array, as_int_array

_FLOAT_ARRAYS = ("theta", "gamma", "xi", "delta", "eta", "tau2", "alpha")
_INT_ARRAYS = ("indicator", "labels")


class Hyperparams(BaseModel):
    """Prior hyperparameters and model switches."""

    a: float = Field(default=10.0, description="Prior sd of coefficients and logit(xi)")
    M: float = Field(default=10.0, description="Beta(M, M) shape for delta")
    q: float = Field(default=0.5, description="Prior P(I_j = 1)")
    b1: float = Field(default=0.1, description="IG shape of the DP base measure")
    b2: float = Field(default=0.1, description="IG scale of the DP base measure")
    c1: float = Field(default=10.0, description="Gamma shape of the DP precision")
    c2: float = Field(default=10.0, description="Gamma rate of the DP precision")
    d1: float = Field(default=0.1, description="Gamma shape of 1/sigma2")
    d2: float = Field(default=0.1, description="Gamma rate of 1/sigma2")
    K: int = Field(default=7, description="Number of B-spline basis functions")
    degree: int = Field(default=3, description="B-spline degree")
    latent_prior: LatentPrior = Field(
        default=LatentPrior.beta_mixture, description="Prior family for delta"
    )
    random_effects: bool = Field(
        default=True, description="Include subject random effects and their DP prior"
    )

    @field_validator("a", "M", "b1", "b2", "c1", "c2", "d1", "d2")
    @classmethod
    def _positive(cls, value: float) -> float:
        if not value > 0:
            raise ConfigError(f"hyperparameters must be positive, got {value}")
        return value

    @field_validator("q")
    @classmethod
    def _weight(cls, value: float) -> float:
        if not 0.0 < value < 1.0:
            raise ConfigError(f"q must lie in (0, 1), got {value}")
        return value

    def basis(self) -> BasisConfig:
        return BasisConfig(K=self.K, degree=self.degree)


class ModelState(BaseModel):
    """Full parameter state of one MCMC iteration.

    Outcome index t is 0 for log mean length (mu), 1 for presence (pi) and 2
    for counts (lambda). Coefficient arrays hold free upper-triangle entries:
    ``theta`` is (3, P), ``gamma`` is (3, d, P) with P = K(K+1)/2. Subject
    arrays ``eta``, ``tau2`` and ``labels`` are (3, n). ``inflation`` is the
    (n, E) zero-inflation indicator, fixed to 1 wherever a count is positive.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    basis: BasisConfig
    theta: np.ndarray
    gamma: np.ndarray
    xi: np.ndarray
    delta: np.ndarray
    indicator: np.ndarray
    eta: np.ndarray
    tau2: np.ndarray
    labels: np.ndarray
    alpha: np.ndarray
    sigma2: float
    inflation: np.ndarray

    @field_validator(*_FLOAT_ARRAYS, mode="before")
    @classmethod
    def _float(cls, value: Any) -> np.ndarray:
        return as_float_array(value)

    @field_validator(*_INT_ARRAYS, mode="before")
    @classmethod
    def _int(cls, value: Any) -> np.ndarray:
        return as_int_array(value)

    @field_validator("inflation", mode="before")
    @classmethod
    def _int8(cls, value: Any) -> np.ndarray:
        return np.asarray(value, dtype=np.int8)

    @model_validator(mode="after")
    def _check_shapes(self) -> ModelState:
        P = self.basis.n_free
        n = self.eta.shape[1] if self.eta.ndim == 2 else -1
        J = self.xi.shape[0]
        expected = {
            "theta": (3, P),
            "eta": (3, n),
            "tau2": (3, n),
            "labels": (3, n),
            "alpha": (3,),
            "xi": (J,),
            "delta": (J,),
            "indicator": (J,),
        }
        for name, shape in expected.items():
            if getattr(self, name).shape != shape:
                raise SymmetryError(
                    f"{name} has shape {getattr(self, name).shape}, expected {shape}"
                )
        if self.gamma.ndim != 3 or self.gamma.shape[0] != 3 or self.gamma.shape[2] != P:
            raise SymmetryError(f"gamma has shape {self.gamma.shape}, expected (3, d, {P})")
        if self.inflation.ndim != 2 or self.inflation.shape[0] != n:
            raise SymmetryError(f"inflation has shape {self.inflation.shape}")
        return self

    @field_serializer(*_FLOAT_ARRAYS, *_INT_ARRAYS, "inflation")
    def _serialize_array(self, value: np.ndarray) -> list[Any]:
        return value.tolist()

    @property
    def n(self) -> int:
        return int(self.eta.shape[1])

    @property
    def J(self) -> int:
        return int(self.xi.shape[0])

    @property
    def d(self) -> int:
        return int(self.gamma.shape[1])

    @property
    def P(self) -> int:
        return self.basis.n_free

    def coefficient_matrix(
        self, t: int, l: int | None = None, scale: float = 10.0
    ) -> SymmetricCoeffMatrix:
        """Baseline (``l`` is None) or covariate-effect coefficients of outcome t."""
        free = self.theta[t] if l is None else self.gamma[t, l]
        return SymmetricCoeffMatrix(K=self.basis.K, free=free.copy(), scale=scale)

    def updated(self, **changes: Any) -> ModelState:
        """Shallow copy with the given fields replaced."""
        return self.model_copy(update=changes)

    def clone(self) -> ModelState:
        return self.model_copy(deep=True)

    @classmethod
    def zeros(cls, basis: BasisConfig, n: int, J: int, d: int, E: int) -> ModelState:
        """Zero coefficients, latents at 1/2, unit scales, one cluster per outcome."""
        P = basis.n_free
        return cls(
            basis=basis,
            theta=np.zeros((3, P)),
            gamma=np.zeros((3, d, P)),
            xi=np.full(J, 0.5),
            delta=np.full(J, 0.5),
            indicator=np.zeros(J, dtype=np.int64),
            eta=np.zeros((3, n)),
            tau2=np.ones((3, n)),
            labels=np.zeros((3, n), dtype=np.int64),
            alpha=np.ones(3),
            sigma2=1.0,
            inflation=np.ones((n, E), dtype=np.int8),
        )
