"""Tests for exact full-conditional draws."""

import math

import numpy as np
import pytest
from scipy import stats

from graphon_connectome.models import ConnectomeDataset, Hyperparams, LatentPrior, ModelState
from graphon_connectome.posterior import LENGTH, model_design, predictor_arrays
from graphon_connectome.samplers import (
    albert_chib_draw,
    draw_zero_inflation,
    flip_indicators,
    gibbs_conjugate_normal_block,
    gibbs_sigma2,
    zero_inflation_probability,
)
from graphon_connectome.samplers.gibbs import (
    draw_gaussian,
    indicator_probability,
    normal_block_terms,
    sigma2_conditional,
)
from graphon_connectome.splines import uniform_config

HALF_NORMAL_MEAN = math.sqrt(2 / math.pi)


def flat_length_dataset(n_edges_observed=True):
    """One subject over five regions, every edge observed at length 1."""
    counts = np.ones((1, 10), dtype=int) if n_edges_observed else np.zeros((1, 10), dtype=int)
    lengths = np.ones((1, 10)) if n_edges_observed else np.full((1, 10), np.nan)
    return ConnectomeDataset(
        subject_ids=["s1"],
        region_names=[f"r{j}" for j in range(5)],
        counts=counts,
        lengths=lengths,
        covariates=np.zeros((1, 4)),
    )


class TestAugmentation:
    """Test the truncated-normal presence augmentation."""

    def test_half_normal_means(self):
        """Test the mean of the truncated draws at a zero predictor."""
        rng = np.random.default_rng(0)
        up = albert_chib_draw(np.ones(1_000_000, dtype=bool), np.zeros(1_000_000), rng)
        down = albert_chib_draw(np.zeros(1_000_000, dtype=bool), np.zeros(1_000_000), rng)
        assert up.mean() == pytest.approx(HALF_NORMAL_MEAN, abs=0.003)
        assert down.mean() == pytest.approx(-HALF_NORMAL_MEAN, abs=0.003)
        assert np.all(up > 0) and np.all(down <= 0)

    def test_far_tails(self):
        """Test that draws stay finite and signed deep in the tails."""
        rng = np.random.default_rng(1)
        up = albert_chib_draw(np.ones(10_000, dtype=bool), np.full(10_000, -6.0), rng)
        down = albert_chib_draw(np.zeros(10_000, dtype=bool), np.full(10_000, 8.0), rng)
        assert np.all(np.isfinite(up)) and np.all(up > 0)
        assert np.all(np.isfinite(down)) and np.all(down <= 0)


class TestZeroInflation:
    """Test the inflation indicator conditional."""

    def test_closed_form_at_zero(self):
        """Test P(Xi = 1 | N = 0) at zero predictors."""
        expected = math.exp(-1) / (1 + math.exp(-1))
        assert float(zero_inflation_probability(np.array(0.0), np.array(0.0))) == pytest.approx(
            expected, abs=1e-12
        )

    def test_large_rate(self):
        """Test that a huge Poisson mean makes a live zero impossible."""
        assert float(zero_inflation_probability(np.array(0.0), np.array(30.0))) < 1e-12

    def test_certain_presence(self):
        """Test that a huge presence predictor makes the edge live."""
        assert float(zero_inflation_probability(np.array(40.0), np.array(0.0))) == pytest.approx(1.0)

    def test_matches_forward_simulation(self):
        """Test the closed form against simulated zeros."""
        rng = np.random.default_rng(2)
        live = rng.uniform(size=1_000_000) < 0.5
        counts = np.where(live, rng.poisson(1.0, size=live.size), 0)
        freq = live[counts == 0].mean()
        prob = float(zero_inflation_probability(np.array(0.0), np.array(0.0)))
        assert freq == pytest.approx(prob, abs=0.005)

    def test_positive_counts_are_live(self, tiny_dataset, random_state):
        """Test that every positive count gets a live indicator."""
        rng = np.random.default_rng(3)
        for _ in range(20):
            inflation = draw_zero_inflation(random_state, tiny_dataset, rng)
            assert np.all(inflation[tiny_dataset.observed] == 1)


class TestNormalBlocks:
    """Test the conjugate coefficient and variance draws."""

    def test_draw_gaussian_moments(self):
        """Test mean and covariance of draws from a precision form."""
        Q = np.array([[2.0, 0.5], [0.5, 1.0]])
        b = np.array([1.0, -1.0])
        rng = np.random.default_rng(4)
        draws = np.array([draw_gaussian(Q, b, rng) for _ in range(40_000)])
        np.testing.assert_allclose(draws.mean(axis=0), np.linalg.solve(Q, b), atol=0.02)
        np.testing.assert_allclose(np.cov(draws.T), np.linalg.inv(Q), atol=0.02)

    def test_block_terms_match_dense_design(self, tiny_dataset, random_state, small_hyper):
        """Test precision and linear term against an explicit design matrix."""
        data, state = tiny_dataset, random_state
        design = model_design(state, data)
        precision, linear = normal_block_terms(LENGTH, state, data, small_hyper, design)

        rows, weights, response = [], [], []
        for i in range(data.n):
            z = np.concatenate([[1.0], data.covariates[i]])
            for e in range(data.E):
                if data.counts[i, e] == 0:
                    continue
                parts = [z[0] * design.phi_base[e]] + [
                    z[1 + l] * design.phi_effect[e] for l in range(data.d)
                ]
                rows.append(np.concatenate(parts))
                weights.append(data.counts[i, e] / state.sigma2)
                response.append(data.log_lengths[i, e] - state.eta[LENGTH, i])
        X, W, y = np.array(rows), np.array(weights), np.array(response)
        expected_precision = X.T @ (W[:, None] * X) + np.eye(X.shape[1]) / small_hyper.a**2
        np.testing.assert_allclose(precision, expected_precision, atol=1e-8)
        np.testing.assert_allclose(linear, X.T @ (W * y), atol=1e-8)

    def test_no_data_draws_prior(self):
        """Test that without subjects the coefficients follow N(0, a^2)."""
        hyper = Hyperparams(K=4)
        data = ConnectomeDataset.empty(["r01", "r02", "r03"])
        state = ModelState.zeros(uniform_config(4), 0, 3, 4, 3)
        design = model_design(state, data)
        rng = np.random.default_rng(5)
        draws = []
        for _ in range(2_000):
            new = gibbs_conjugate_normal_block(LENGTH, state, data, hyper, rng, design=design)
            draws.append(np.concatenate([new.theta[LENGTH], new.gamma[LENGTH].ravel()]))
        pooled = np.concatenate(draws) / hyper.a
        assert stats.kstest(pooled, "norm").pvalue > 0.01

    def test_single_observation_least_squares_limit(self):
        """Test that a flat prior fits one observed edge with variance sigma2 / N."""
        sigma2, count, log_length = 0.5, 4, 3.0
        data = ConnectomeDataset(
            subject_ids=["s1"],
            region_names=["r1", "r2"],
            counts=np.array([[count]]),
            lengths=np.array([[math.exp(log_length)]]),
            covariates=np.zeros((1, 4)),
        )
        hyper = Hyperparams(K=4, a=1e4)
        state = ModelState.zeros(uniform_config(4), 1, 2, 4, 1).updated(sigma2=sigma2)
        design = model_design(state, data)
        rng = np.random.default_rng(7)
        draws = 20_000
        fitted = np.array(
            [
                predictor_arrays(
                    gibbs_conjugate_normal_block(LENGTH, state, data, hyper, rng, design=design),
                    data,
                )[LENGTH][0, 0]
                for _ in range(draws)
            ]
        )
        se = math.sqrt(sigma2 / count / draws)
        assert fitted.mean() == pytest.approx(log_length, abs=4 * se)
        assert fitted.var() == pytest.approx(sigma2 / count, rel=0.05)

    def test_sigma2_conditional_at_zero_residual(self, small_hyper):
        """Test the gamma shape and rate when every residual is zero."""
        data = flat_length_dataset()
        state = ModelState.zeros(uniform_config(4), 1, 5, 4, 10)
        shape, rate = sigma2_conditional(state, data, small_hyper)
        assert shape == pytest.approx(small_hyper.d1 + 5)
        assert rate == pytest.approx(small_hyper.d2)

    def test_sigma2_conditional_without_lengths(self, small_hyper):
        """Test that no observed edges leaves the prior."""
        data = flat_length_dataset(n_edges_observed=False)
        state = ModelState.zeros(uniform_config(4), 1, 5, 4, 10)
        assert sigma2_conditional(state, data, small_hyper) == (small_hyper.d1, small_hyper.d2)

    def test_precision_prior_mean(self):
        """Test the mean of a million precision draws without observed lengths."""
        hyper = Hyperparams(K=4, d1=2.0, d2=4.0)
        data = flat_length_dataset(n_edges_observed=False)
        state = ModelState.zeros(uniform_config(4), 1, 5, 4, 10)
        rng = np.random.default_rng(8)
        precision = np.array(
            [1.0 / gibbs_sigma2(state, data, hyper, rng) for _ in range(1_000_000)]
        )
        # Gamma(2, rate 4): mean 1/2, sd sqrt(2) / 4
        assert precision.mean() == pytest.approx(0.5, abs=2e-3)

    def test_sigma2_draws_match_conditional(self, tiny_dataset, random_state, small_hyper):
        """Test that the precision draws follow the gamma conditional."""
        preds = predictor_arrays(random_state, tiny_dataset)
        shape, rate = sigma2_conditional(random_state, tiny_dataset, small_hyper, preds)
        rng = np.random.default_rng(6)
        precision = np.array(
            [
                1.0 / gibbs_sigma2(random_state, tiny_dataset, small_hyper, rng, preds)
                for _ in range(20_000)
            ]
        )
        assert stats.kstest(precision, stats.gamma(shape, scale=1 / rate).cdf).pvalue > 0.01


class TestIndicators:
    """Test the latent mixture indicators."""

    def test_probability_formula(self):
        """Test the indicator conditional against Bayes' rule."""
        hyper = Hyperparams(q=0.3, M=10.0)
        delta = np.array([0.05, 0.5, 0.93])
        density = stats.beta.pdf(delta, 10.0, 10.0)
        expected = 0.3 / (0.3 + 0.7 * density)
        np.testing.assert_allclose(indicator_probability(delta, hyper), expected, rtol=1e-12)

    def test_logit_normal_prior_is_noop(self, random_state):
        """Test that indicators are untouched under the logit-normal prior."""
        hyper = Hyperparams(K=4, latent_prior=LatentPrior.logit_normal)
        state = flip_indicators(random_state, hyper, np.random.default_rng(0))
        assert state is random_state

    def test_extreme_delta_favours_uniform(self, random_state, small_hyper):
        """Test that a latent far in the tail is almost surely uniform-drawn."""
        state = random_state.updated(delta=np.array([0.001, 0.5, 0.999]))
        rng = np.random.default_rng(7)
        flips = np.array([flip_indicators(state, small_hyper, rng).indicator for _ in range(200)])
        assert flips[:, 0].mean() == 1.0
        assert flips[:, 2].mean() == 1.0
