"""Blocked linear designs over (subject, edge) observations.

The linear predictor of one outcome is

    pred[i, e] = F0[e] . theta + sum_l Z[i, l] * (F1[e] . gamma_l) + eta[i]

where F0 holds the graphon features of the baseline latents xi and F1 those
of the effect latents delta. Stacking beta = (theta, gamma_1, ..., gamma_d)
gives a regression whose design row for (i, e) is F_a[e] * z[i, a] per block
a, with z = (1, Z). The full design has n*E rows and is never materialised;
weighted Gram matrices are assembled block by block.
"""

from __future__ import annotations

from typing import Protocol

import numpy as np

from graphon_connectome.splines import BasisConfig, basis_matrix, pair_features


class LinearDesign(Protocol):
    """What the IRLS solver needs from a design."""

    @property
    def n_params(self) -> int: ...

    def gram(self, weights: np.ndarray) -> np.ndarray: ...

    def moment(self, weights: np.ndarray, response: np.ndarray) -> np.ndarray: ...

    def fitted(self, beta: np.ndarray) -> np.ndarray: ...


def edge_features(
    latents: np.ndarray, basis: BasisConfig, rows: np.ndarray, cols: np.ndarray
) -> np.ndarray:
    """Graphon features of every modelled edge; shape (E, P)."""
    B = basis_matrix(latents, basis)
    return pair_features(B[rows], B[cols])


class DenseDesign:
    """Ordinary design matrix with one weight per row."""

    def __init__(self, X: np.ndarray) -> None:
        self.X = np.asarray(X, dtype=float)

    @property
    def n_params(self) -> int:
        return self.X.shape[1]

    def gram(self, weights: np.ndarray) -> np.ndarray:
        return self.X.T @ (weights[:, None] * self.X)

    def moment(self, weights: np.ndarray, response: np.ndarray) -> np.ndarray:
        return self.X.T @ (weights * response)

    def fitted(self, beta: np.ndarray) -> np.ndarray:
        return self.X @ beta


class CoefficientDesign:
    """Design of (theta_t, gamma_t) for one outcome, weights shaped (n, E)."""

    def __init__(
        self, phi_base: np.ndarray, phi_effect: np.ndarray, covariates: np.ndarray
    ) -> None:
        self.phi_base = phi_base
        self.phi_effect = phi_effect
        self.covariates = np.asarray(covariates, dtype=float)
        n = self.covariates.shape[0]
        self.z = np.column_stack([np.ones(n), self.covariates])

    @property
    def P(self) -> int:
        return self.phi_base.shape[1]

    @property
    def d(self) -> int:
        return self.covariates.shape[1]

    @property
    def n_params(self) -> int:
        return (self.d + 1) * self.P

    def _block(self, a: int) -> np.ndarray:
        return self.phi_base if a == 0 else self.phi_effect

    def gram(self, weights: np.ndarray) -> np.ndarray:
        """X' W X assembled from per-edge covariate cross-products."""
        omega = np.einsum("ie,ia,ib->eab", weights, self.z, self.z)
        P, blocks = self.P, self.d + 1
        out = np.empty((blocks * P, blocks * P))
        for a in range(blocks):
            Fa = self._block(a)
            for b in range(a, blocks):
                Fb = self._block(b)
                block = Fa.T @ (omega[:, a, b][:, None] * Fb)
                out[a * P : (a + 1) * P, b * P : (b + 1) * P] = block
                out[b * P : (b + 1) * P, a * P : (a + 1) * P] = block.T
        return out

    def moment(self, weights: np.ndarray, response: np.ndarray) -> np.ndarray:
        """X' W y."""
        return self.gradient(weights * response)

    def gradient(self, G: np.ndarray) -> np.ndarray:
        """X' G for an (n, E) array of per-observation partials."""
        r = G.T @ self.z
        return np.concatenate([self._block(a).T @ r[:, a] for a in range(self.d + 1)])

    def diag_information(self, weights: np.ndarray) -> np.ndarray:
        """Diagonal of X' W X."""
        omega_diag = np.einsum("ie,ia->ea", weights, self.z**2)
        return np.concatenate(
            [(self._block(a) ** 2).T @ omega_diag[:, a] for a in range(self.d + 1)]
        )

    def fitted(self, beta: np.ndarray) -> np.ndarray:
        theta, gamma = self.split(beta)
        return (self.phi_base @ theta)[None, :] + self.covariates @ (
            self.phi_effect @ gamma.T
        ).T

    def stack(self, theta: np.ndarray, gamma: np.ndarray) -> np.ndarray:
        return np.concatenate([theta, gamma.reshape(-1)])

    def split(self, beta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return beta[: self.P], beta[self.P :].reshape(self.d, self.P)
