"""Tests for the IRLS maximum-likelihood fits."""

import numpy as np
import pytest
from scipy import special, stats

from graphon_connectome.design import CoefficientDesign, DenseDesign
from graphon_connectome.glm import GlmFamily, GlmResult, OutcomeFits, fit_glm, fit_outcome_models


def newton_poisson(X, y, iterations=50):
    beta = np.zeros(X.shape[1])
    for _ in range(iterations):
        mu = np.exp(X @ beta)
        beta = beta + np.linalg.solve(X.T @ (mu[:, None] * X), X.T @ (y - mu))
    return beta


class TestGaussian:
    """Test weighted least squares."""

    def test_matches_weighted_least_squares(self):
        """Test coefficients, scale and log-likelihood against a direct solve."""
        rng = np.random.default_rng(0)
        X = np.column_stack([np.ones(30), rng.standard_normal((30, 2))])
        y = X @ np.array([1.0, -0.5, 2.0]) + 0.3 * rng.standard_normal(30)
        w = rng.integers(1, 6, 30).astype(float)
        result = fit_glm(DenseDesign(X), y, GlmFamily.gaussian, weights=w)

        sw = np.sqrt(w)
        beta = np.linalg.lstsq(sw[:, None] * X, sw * y, rcond=None)[0]
        resid = y - X @ beta
        sigma2 = np.sum(w * resid**2) / 30
        loglik = np.sum(stats.norm.logpdf(y, X @ beta, np.sqrt(sigma2 / w)))
        np.testing.assert_allclose(result.coef, beta, atol=1e-10)
        assert result.scale == pytest.approx(sigma2, rel=1e-10)
        assert result.loglik == pytest.approx(loglik, rel=1e-10)
        assert result.converged and not result.failed

    def test_mask_ignores_nan(self):
        """Test that masked-out NaN responses are skipped."""
        X = np.column_stack([np.ones(4), np.arange(4.0)])
        y = np.array([1.0, 3.0, np.nan, 7.0])
        result = fit_glm(DenseDesign(X), y, GlmFamily.gaussian)
        np.testing.assert_allclose(result.coef, [1.0, 2.0], atol=1e-10)
        assert result.n_obs == 3

    def test_rank_deficient(self):
        """Test that fewer observations than parameters fails."""
        X = np.array([[1.0, 0.0, 2.0], [1.0, 1.0, 0.0]])
        result = fit_glm(DenseDesign(X), np.array([1.0, 2.0]), GlmFamily.gaussian)
        assert result.failed
        assert result.rank_deficient
        assert np.all(np.isnan(result.coef))


class TestIrls:
    """Test the Poisson and probit fits."""

    def test_poisson_matches_newton(self):
        """Test the Poisson fit against an independent Newton iteration."""
        X = np.column_stack([np.ones(3), np.arange(3.0)])
        y = np.array([1.0, 3.0, 7.0])
        result = fit_glm(DenseDesign(X), y, GlmFamily.poisson)
        np.testing.assert_allclose(result.coef, newton_poisson(X, y), atol=1e-6)
        expected = np.sum(stats.poisson.logpmf(y, np.exp(X @ result.coef)))
        assert result.loglik == pytest.approx(expected, rel=1e-10)

    def test_probit_score_vanishes(self):
        """Test that the probit score is zero at the fitted coefficients."""
        rng = np.random.default_rng(1)
        X = np.column_stack([np.ones(400), rng.standard_normal(400)])
        y = (rng.uniform(size=400) < special.ndtr(X @ np.array([0.2, 0.8]))).astype(float)
        result = fit_glm(DenseDesign(X), y, GlmFamily.probit)
        eta = X @ result.coef
        cdf, pdf = special.ndtr(eta), stats.norm.pdf(eta)
        score = X.T @ ((y - cdf) * pdf / (cdf * (1 - cdf)))
        np.testing.assert_allclose(score, 0.0, atol=1e-3)

    def test_wide_count_range_converges(self):
        """Test that counts spanning five orders of magnitude still converge."""
        rng = np.random.default_rng(4)
        x = np.linspace(-10.0, 10.0, 200)
        X = np.column_stack([np.ones_like(x), x])
        y = rng.poisson(np.exp(1.0 + 0.6 * x)).astype(float)
        result = fit_glm(DenseDesign(X), y, GlmFamily.poisson)
        assert result.converged
        np.testing.assert_allclose(result.coef, [1.0, 0.6], atol=0.05)
        score = X.T @ (y - np.exp(X @ result.coef))
        assert np.all(np.abs(score) <= 1e-6 * np.abs(X.T @ y).max())

    def test_empty_mask_fails(self):
        """Test that a fit with no observations is reported as failed."""
        X = np.column_stack([np.ones(3), np.arange(3.0)])
        result = fit_glm(DenseDesign(X), np.ones(3), GlmFamily.poisson, mask=np.zeros(3, bool))
        assert result.failed
        assert result.n_obs == 0

    def test_failed_fit_poisons_aic(self):
        """Test that one failed regression makes the AIC NaN."""
        good = GlmResult(coef=np.zeros(2), loglik=-3.0, converged=True, iterations=2, n_obs=5)
        bad = GlmResult(
            coef=np.full(2, np.nan), loglik=np.nan, converged=False, iterations=50, n_obs=5
        )
        assert np.isnan(OutcomeFits(length=good, presence=bad, count=good, n_params=2).aic())
        fits = OutcomeFits(length=good, presence=good, count=good, n_params=2)
        assert fits.aic() == pytest.approx(6 * 2 + 2 * 9.0)


class TestCoefficientDesign:
    """Test the structured design against its dense expansion."""

    def test_gram_and_fitted_match_dense(self):
        """Test Gram matrix, moment and fitted values."""
        rng = np.random.default_rng(2)
        n, E, P, d = 4, 3, 5, 2
        phi_base, phi_effect = rng.standard_normal((E, P)), rng.standard_normal((E, P))
        Z = rng.standard_normal((n, d))
        design = CoefficientDesign(phi_base, phi_effect, Z)
        X = np.array(
            [
                np.concatenate([phi_base[e]] + [Z[i, l] * phi_effect[e] for l in range(d)])
                for i in range(n)
                for e in range(E)
            ]
        )
        W = rng.uniform(0.5, 2.0, (n, E))
        y = rng.standard_normal((n, E))
        beta = rng.standard_normal(design.n_params)
        np.testing.assert_allclose(design.gram(W), X.T @ (W.ravel()[:, None] * X), atol=1e-10)
        np.testing.assert_allclose(design.moment(W, y), X.T @ (W * y).ravel(), atol=1e-10)
        np.testing.assert_allclose(design.fitted(beta).ravel(), X @ beta, atol=1e-10)
        assert design.n_params == (d + 1) * P

    def test_outcome_fits_use_connected_edges(self):
        """Test that the length and count fits see only positive counts."""
        rng = np.random.default_rng(3)
        n, E, P = 40, 3, 2
        design = CoefficientDesign(
            rng.uniform(0.5, 1.5, (E, P)), rng.uniform(0.5, 1.5, (E, P)), rng.standard_normal((n, 1))
        )
        counts = rng.poisson(2.0, (n, E))
        log_lengths = np.where(counts >= 1, rng.normal(3.0, 0.2, (n, E)), np.nan)
        fits = fit_outcome_models(counts, log_lengths, design)
        observed = int((counts >= 1).sum())
        assert fits.length.n_obs == observed
        assert fits.count.n_obs == observed
        assert fits.presence.n_obs == n * E
