"""Tests for the leapfrog kernel and step-size adaptation."""

import numpy as np
import pytest

from graphon_connectome.exceptions import ConfigError, SamplerError
from graphon_connectome.inference.diagnostics import effective_sample_size
from graphon_connectome.samplers import HmcConfig, adapt_step_size, hmc_step, hmc_update


def standard_normal(q):
    return -0.5 * float(q @ q), -q


def run_normal_chain(step_size, n_iter, seed, n_steps=10):
    rng = np.random.default_rng(seed)
    q = np.zeros(1)
    draws, delta_h, accepted = np.empty(n_iter), np.empty(n_iter), 0
    for s in range(n_iter):
        result = hmc_step(q, standard_normal, step_size, n_steps, rng)
        q = result.position
        draws[s] = q[0]
        delta_h[s] = result.delta_h
        accepted += result.accepted
    return draws, delta_h, accepted / n_iter


class TestHmcStep:
    """Test single leapfrog proposals."""

    def test_samples_standard_normal(self):
        """Test mean and variance of a long chain on N(0, 1)."""
        draws, _, _ = run_normal_chain(0.1, 50_000, seed=1)
        se = draws.std() / np.sqrt(effective_sample_size(draws))
        assert abs(draws.mean()) < 4 * se
        assert draws.var() == pytest.approx(1.0, abs=0.05)

    def test_tiny_step_accepted(self):
        """Test that a negligible step is accepted and barely moves."""
        rng = np.random.default_rng(0)
        result = hmc_step(np.array([0.3, -1.2]), standard_normal, 1e-12, 10, rng)
        assert result.accepted
        np.testing.assert_allclose(result.position, [0.3, -1.2], atol=1e-9)

    def test_energy_error_scales_quadratically(self):
        """Test that halving the step cuts the energy error about fourfold."""
        _, coarse, _ = run_normal_chain(0.1, 5_000, seed=2)
        _, fine, _ = run_normal_chain(0.05, 5_000, seed=3)
        ratio = np.mean(np.abs(coarse)) / np.mean(np.abs(fine))
        assert 3.0 < ratio < 5.0

    @pytest.mark.parametrize("step_size", [0.0, -0.1])
    def test_non_positive_step(self, step_size):
        """Test that the step size must be positive."""
        with pytest.raises(SamplerError):
            hmc_step(np.zeros(1), standard_normal, step_size, 10, np.random.default_rng(0))

    def test_non_finite_trajectory_rejected(self):
        """Test that a non-finite start rejects without moving."""

        def half_line(q):
            if q[0] <= 0:
                return -np.inf, np.array([np.nan])
            return -float(q[0]), -np.ones(1)

        rng = np.random.default_rng(4)
        result = hmc_step(np.array([1e-3]), lambda q: half_line(q - 0.5), 1.0, 5, rng)
        assert result.position[0] == 1e-3
        assert not result.accepted
        assert result.nonfinite

    def test_same_seed_same_proposal(self):
        """Test that a fixed generator state gives the same outcome."""
        a = hmc_step(np.ones(3), standard_normal, 0.2, 7, np.random.default_rng(9))
        b = hmc_step(np.ones(3), standard_normal, 0.2, 7, np.random.default_rng(9))
        assert np.array_equal(a.position, b.position)
        assert a.delta_h == b.delta_h


class TestAdaptation:
    """Test step-size adaptation rules."""

    def test_inside_band_unchanged(self):
        """Test that an acceptance inside the band keeps the step."""
        assert adapt_step_size(0.7, 0.05, (0.55, 0.90)) == 0.05

    def test_low_acceptance_shrinks(self):
        """Test that a low acceptance rate shrinks the step by 0.8."""
        assert adapt_step_size(0.3, 0.05, (0.55, 0.90)) == pytest.approx(0.04)

    def test_high_acceptance_grows(self):
        """Test that a high acceptance rate grows the step by 1.25."""
        assert adapt_step_size(0.95, 0.05, (0.55, 0.90)) == pytest.approx(0.0625)

    def test_no_adaptation_after_burn_in(self):
        """Test that adapting during sampling is refused."""
        with pytest.raises(SamplerError):
            adapt_step_size(0.3, 0.05, (0.55, 0.90), iteration=101, burn_in=100)

    def test_reaches_band(self):
        """Test that windowed adaptation brings acceptance into the band."""
        eps = 2.5
        rates = []
        for window in range(20):
            _, _, rate = run_normal_chain(eps, 100, seed=100 + window)
            rates.append(rate)
            eps = adapt_step_size(rate, eps, (0.55, 0.90))
        assert any(0.55 <= r <= 0.90 for r in rates)

    def test_band_validation(self):
        """Test that an inverted acceptance band is rejected."""
        with pytest.raises(ConfigError):
            HmcConfig(target_accept_band=(0.9, 0.5))

    def test_from_settings(self, monkeypatch):
        """Test that kernel settings come from the environment."""
        monkeypatch.setenv("GRAPHON_LEAPFROG_STEPS", "7")
        assert HmcConfig.from_settings().leapfrog_steps == 7


class TestHmcUpdate:
    """Test HMC updates of model blocks."""

    def test_rejection_keeps_state(self, tiny_dataset, random_state, small_hyper):
        """Test that a rejected block update returns the same state object."""
        cfg = HmcConfig(leapfrog_steps=3, step_size=50.0)
        rng = np.random.default_rng(6)
        state, result = hmc_update(
            "count_coefficients", random_state, tiny_dataset, small_hyper, cfg, rng
        )
        if not result.accepted:
            assert state is random_state
        else:
            assert not np.array_equal(state.theta, random_state.theta)

    def test_small_step_moves_latents(self, tiny_dataset, random_state, small_hyper):
        """Test that a small-step latent update keeps latents inside (0, 1)."""
        cfg = HmcConfig(leapfrog_steps=5, step_size=0.01)
        rng = np.random.default_rng(7)
        state, result = hmc_update("xi", random_state, tiny_dataset, small_hyper, cfg, rng)
        assert result.accepted
        assert np.all((state.xi > 0) & (state.xi < 1))
        assert not np.array_equal(state.xi, random_state.xi)
