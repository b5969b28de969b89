"""B-spline bases on [0, 1] and symmetric tensor-product graphons.

A graphon with coefficient matrix Θ (K x K, symmetric) is evaluated as the
quadratic form b(u)' Θ b(v), where b is the vector of K clamped B-spline basis
functions. Coefficients are stored as the upper triangle (row-major order of
``numpy.triu_indices``); the feature attached to a free coefficient (m, m') is
B_m(u)B_m'(v) + B_m'(u)B_m(v) off the diagonal and B_m(u)B_m(v) on it, so that
the graphon value is the dot product of free coefficients and features.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_serializer, model_validator
from scipy.interpolate import BSpline

from graphon_connectome.exceptions import (
    KnotConfigError,
    SplineDomainError,
    SymmetryError,
)


class BasisConfig(BaseModel):
    """Clamped B-spline basis on [0, 1]."""

    model_config = ConfigDict(frozen=True)

    K: int = Field(default=7, description="Number of basis functions")
    degree: int = Field(default=3, description="Polynomial degree")
    knots: tuple[float, ...] | None = Field(
        default=None,
        description="Clamped knot vector; uniform interior knots when omitted",
    )

    @model_validator(mode="before")
    @classmethod
    def _fill_uniform_knots(cls, data: Any) -> Any:
        """Place uniform interior knots when none are supplied."""
        if isinstance(data, dict) and data.get("knots") is None:
            K = int(data.get("K", 7))
            degree = int(data.get("degree", 3))
            if K < degree + 1:
                raise KnotConfigError(f"K={K} too small for degree {degree}")
            interior = np.linspace(0.0, 1.0, K - degree + 1)[1:-1]
            knots = [0.0] * (degree + 1) + interior.tolist() + [1.0] * (degree + 1)
            data = {**data, "knots": tuple(knots)}
        return data

    @model_validator(mode="after")
    def _check_knots(self) -> BasisConfig:
        """Validate length, clamping and ordering of the knot vector."""
        if self.K < 4:
            raise KnotConfigError(f"K must be at least 4, got {self.K}")
        if self.degree < 1:
            raise KnotConfigError(f"degree must be at least 1, got {self.degree}")
        t = np.asarray(self.knots, dtype=float)
        p = self.degree
        if t.size != self.K + p + 1:
            raise KnotConfigError(
                f"knot vector has {t.size} entries, expected K + degree + 1 = "
                f"{self.K + p + 1}"
            )
        if np.any(t[: p + 1] != 0.0) or np.any(t[-(p + 1) :] != 1.0):
            raise KnotConfigError("knot vector must be clamped at 0 and 1")
        interior = t[p + 1 : -(p + 1)]
        if np.any(interior <= 0.0) or np.any(interior >= 1.0):
            raise KnotConfigError("interior knots must lie strictly inside (0, 1)")
        if np.any(np.diff(t) < 0.0):
            raise KnotConfigError("knot vector must be non-decreasing")
        return self

    @property
    def n_free(self) -> int:
        """Number of free coefficients of a symmetric K x K matrix."""
        return self.K * (self.K + 1) // 2


class SymmetricCoeffMatrix(BaseModel):
    """Symmetric K x K coefficient matrix stored as its upper triangle."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    K: int
    free: np.ndarray = Field(description="Upper-triangle entries, triu_indices order")
    scale: float = Field(default=10.0, description="Prior standard deviation a")

    @model_validator(mode="after")
    def _check_size(self) -> SymmetricCoeffMatrix:
        """Free vector length must match K."""
        self.free = np.asarray(self.free, dtype=float)
        if self.free.shape != (self.K * (self.K + 1) // 2,):
            raise SymmetryError(
                f"expected {self.K * (self.K + 1) // 2} free coefficients, "
                f"got shape {self.free.shape}"
            )
        return self

    @field_serializer("free")
    def _serialize_free(self, value: np.ndarray) -> list[float]:
        return value.tolist()

    @classmethod
    def from_matrix(cls, matrix: np.ndarray, scale: float = 10.0) -> SymmetricCoeffMatrix:
        """Build from a full matrix, which must be exactly symmetric."""
        mat = np.asarray(matrix, dtype=float)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise SymmetryError(f"coefficient matrix must be square, got {mat.shape}")
        if not np.array_equal(mat, mat.T):
            raise SymmetryError("coefficient matrix is not exactly symmetric")
        return cls(K=mat.shape[0], free=matrix_to_free(mat), scale=scale)

    @classmethod
    def zeros(cls, K: int, scale: float = 10.0) -> SymmetricCoeffMatrix:
        return cls(K=K, free=np.zeros(K * (K + 1) // 2), scale=scale)

    @property
    def matrix(self) -> np.ndarray:
        return free_to_matrix(self.free, self.K)


class GraphonGradient(BaseModel):
    """Partials of a graphon value with respect to coefficients and arguments."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    coefficients: np.ndarray = Field(
        description="K x K; entry (m, m') is the partial for the shared coefficient"
    )
    du: float
    dv: float


def free_to_matrix(free: np.ndarray, K: int) -> np.ndarray:
    """Expand an upper-triangle vector into an exactly symmetric matrix."""
    rows, cols = np.triu_indices(K)
    mat = np.zeros((K, K))
    mat[rows, cols] = free
    mat[cols, rows] = free
    return mat


def matrix_to_free(matrix: np.ndarray) -> np.ndarray:
    rows, cols = np.triu_indices(matrix.shape[0])
    return np.asarray(matrix, dtype=float)[rows, cols].copy()


@lru_cache(maxsize=64)
def _splines(knots: tuple[float, ...], degree: int, K: int) -> tuple[BSpline, BSpline]:
    """Vector-valued spline returning all K basis functions, and its derivative."""
    spline = BSpline(np.asarray(knots), np.eye(K), degree, extrapolate=True)
    return spline, spline.derivative(1)


def _check_domain(x: np.ndarray) -> None:
    if not np.all((x >= 0.0) & (x <= 1.0)):
        bad = x[~((x >= 0.0) & (x <= 1.0))]
        raise SplineDomainError(f"basis evaluated outside [0, 1]: {bad[:5].tolist()}")


def basis_matrix(x: np.ndarray, cfg: BasisConfig) -> np.ndarray:
    """Evaluate all basis functions at each point; shape (len(x), K)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    _check_domain(x)
    assert cfg.knots is not None
    spline, _ = _splines(cfg.knots, cfg.degree, cfg.K)
    values = spline(x)
    # tiny negative round-off from de Boor near knots
    return np.clip(values, 0.0, None)


def basis_derivative_matrix(x: np.ndarray, cfg: BasisConfig) -> np.ndarray:
    """First derivatives of all basis functions; shape (len(x), K)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    _check_domain(x)
    assert cfg.knots is not None
    _, derivative = _splines(cfg.knots, cfg.degree, cfg.K)
    return np.asarray(derivative(x))


def bspline_basis(x: float, cfg: BasisConfig) -> np.ndarray:
    """Evaluate the K basis functions at a single point in [0, 1]."""
    return basis_matrix(np.array([x]), cfg)[0]


def _coeff_matrix(coeffs: SymmetricCoeffMatrix, cfg: BasisConfig) -> np.ndarray:
    if coeffs.K != cfg.K:
        raise SymmetryError(f"coefficient K={coeffs.K} does not match basis K={cfg.K}")
    return coeffs.matrix


def graphon_eval(
    coeffs: SymmetricCoeffMatrix, u: float, v: float, cfg: BasisConfig
) -> float:
    """Evaluate the graphon at (u, v) as a symmetrized quadratic form."""
    theta = _coeff_matrix(coeffs, cfg)
    bu = bspline_basis(u, cfg)
    bv = bspline_basis(v, cfg)
    return float(0.5 * (bu @ theta @ bv + bv @ theta @ bu))


def graphon_gradient(
    coeffs: SymmetricCoeffMatrix, u: float, v: float, cfg: BasisConfig
) -> GraphonGradient:
    """Partials of graphon_eval with respect to the shared coefficients, u and v."""
    theta = _coeff_matrix(coeffs, cfg)
    bu = bspline_basis(u, cfg)
    bv = bspline_basis(v, cfg)
    dbu = basis_derivative_matrix(np.array([u]), cfg)[0]
    dbv = basis_derivative_matrix(np.array([v]), cfg)[0]
    outer = np.outer(bu, bv)
    coef = outer + outer.T
    coef[np.diag_indices(cfg.K)] *= 0.5
    return GraphonGradient(
        coefficients=coef,
        du=float(dbu @ theta @ bv),
        dv=float(bu @ theta @ dbv),
    )


def pair_features(basis_a: np.ndarray, basis_b: np.ndarray) -> np.ndarray:
    """Features of the free coefficients for node pairs; shape (E, K(K+1)/2).

    ``basis_a`` and ``basis_b`` hold the basis rows of the two endpoints of each
    pair, shape (E, K).
    """
    K = basis_a.shape[1]
    outer = basis_a[:, :, None] * basis_b[:, None, :]
    sym = outer + outer.transpose(0, 2, 1)
    rows, cols = np.triu_indices(K)
    feats = sym[:, rows, cols]
    feats[:, rows == cols] *= 0.5
    return feats


def graphon_matrix(free: np.ndarray, basis: np.ndarray) -> np.ndarray:
    """Graphon evaluated at all node pairs; exactly symmetric J x J matrix."""
    theta = free_to_matrix(free, basis.shape[1])
    values = basis @ theta @ basis.T
    return 0.5 * (values + values.T)


def uniform_config(K: int, degree: int = 3) -> BasisConfig:
    """Basis with uniform interior knots."""
    return BasisConfig(K=K, degree=degree)
