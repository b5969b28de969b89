"""Tests for the Dirichlet-process scale mixture updates."""

import numpy as np
import pytest
from scipy import integrate, special, stats

from graphon_connectome.exceptions import SamplerError
from graphon_connectome.models import Hyperparams, ModelState
from graphon_connectome.posterior import COUNT, LENGTH
from graphon_connectome.samplers import dp_scale_update, log_marginal_effect, update_alpha
from graphon_connectome.samplers.dp import cluster_count, relabel
from graphon_connectome.splines import uniform_config


def effect_state(eta_row, *, alpha=1.0, labels=None, tau2=None):
    n = len(eta_row)
    state = ModelState.zeros(uniform_config(4), n, 2, 0, 1)
    eta = np.zeros((3, n))
    eta[LENGTH] = eta_row
    new_labels = state.labels.copy()
    if labels is not None:
        new_labels[LENGTH] = labels
    new_tau2 = state.tau2.copy()
    if tau2 is not None:
        new_tau2[LENGTH] = tau2
    return state.updated(
        eta=eta, labels=new_labels, tau2=new_tau2, alpha=np.full(3, alpha)
    )


class TestScaleUpdate:
    """Test the collapsed CRP sweep."""

    def test_marginal_is_scaled_t(self):
        """Test the integrated effect density against a Student t."""
        b1, b2 = 1.5, 0.7
        eta = np.array([-2.0, 0.0, 0.4, 3.1])
        expected = stats.t.logpdf(eta, df=2 * b1, scale=np.sqrt(b2 / b1))
        np.testing.assert_allclose(log_marginal_effect(eta, b1, b2), expected, rtol=1e-10)

    def test_tiny_precision_merges_clusters(self):
        """Test that a vanishing precision collapses to one cluster."""
        rng = np.random.default_rng(0)
        state = effect_state(
            0.5 * rng.standard_normal(10),
            alpha=1e-12,
            labels=np.arange(10),
            tau2=rng.uniform(0.2, 2.0, 10),
        )
        hyper = Hyperparams(K=4)
        for _ in range(100):
            state = dp_scale_update(LENGTH, state, hyper, rng)
        assert cluster_count(state, LENGTH) == 1
        assert np.all(state.labels[LENGTH] == 0)

    def test_scales_shared_within_clusters(self):
        """Test that members of a cluster share one positive scale."""
        rng = np.random.default_rng(1)
        state = effect_state(rng.standard_normal(12), alpha=2.0)
        hyper = Hyperparams(K=4)
        for _ in range(10):
            state = dp_scale_update(LENGTH, state, hyper, rng)
            labels, tau2 = state.labels[LENGTH], state.tau2[LENGTH]
            for label in np.unique(labels):
                assert np.unique(tau2[labels == label]).size == 1
            assert np.all(tau2 > 0)
            assert np.array_equal(labels, relabel(labels))

    def test_other_outcomes_untouched(self):
        """Test that a sweep changes only its own outcome."""
        rng = np.random.default_rng(2)
        state = effect_state(rng.standard_normal(5))
        new = dp_scale_update(LENGTH, state, Hyperparams(K=4), rng)
        assert np.array_equal(new.tau2[COUNT], state.tau2[COUNT])
        assert np.array_equal(new.labels[COUNT], state.labels[COUNT])

    def test_single_subject_scale_posterior(self):
        """Test that one subject's scale follows its inverse-gamma posterior."""
        hyper = Hyperparams(K=4, b1=2.0, b2=1.0)
        eta = 0.8
        state = effect_state(np.array([eta]))
        rng = np.random.default_rng(3)
        draws = np.array(
            [dp_scale_update(LENGTH, state, hyper, rng).tau2[LENGTH, 0] for _ in range(20_000)]
        )
        target = stats.invgamma(hyper.b1 + 0.5, scale=hyper.b2 + eta**2 / 2)
        assert stats.kstest(draws, target.cdf).pvalue > 0.01

    def test_relabel_first_appearance(self):
        """Test that labels are renumbered in order of first appearance."""
        assert relabel(np.array([7, 3, 7, 9, 3])).tolist() == [0, 1, 0, 2, 1]


class TestPrecisionUpdate:
    """Test the auxiliary-variable precision draw."""

    def test_positive_for_one_subject(self):
        """Test a single subject in a single cluster."""
        draw = update_alpha(1.0, 1, 1, Hyperparams(), np.random.default_rng(0))
        assert np.isfinite(draw) and draw > 0

    def test_concentrated_prior(self):
        """Test that a huge prior rate pins the precision near c1 / c2."""
        hyper = Hyperparams(c1=10.0, c2=1e6)
        rng = np.random.default_rng(1)
        draws = [update_alpha(1e-5, 2, 10, hyper, rng) for _ in range(1_000)]
        assert np.mean(draws) < 1e-4

    def test_no_clusters(self):
        """Test that zero clusters is an error."""
        with pytest.raises(SamplerError):
            update_alpha(1.0, 0, 10, Hyperparams(), np.random.default_rng(0))

    def test_stationary_mean(self):
        """Test the chain of draws against the posterior mean by quadrature."""
        hyper = Hyperparams(c1=10.0, c2=10.0)
        n, k = 10, 3

        def log_density(a):
            return (
                (hyper.c1 - 1 + k) * np.log(a)
                - hyper.c2 * a
                + special.gammaln(a)
                - special.gammaln(a + n)
            )

        mass = integrate.quad(lambda a: np.exp(log_density(a)), 0, np.inf)[0]
        first = integrate.quad(lambda a: a * np.exp(log_density(a)), 0, np.inf)[0]
        expected = first / mass

        rng = np.random.default_rng(2)
        alpha, draws = 1.0, np.empty(100_000)
        for s in range(draws.size):
            alpha = update_alpha(alpha, k, n, hyper, rng)
            draws[s] = alpha
        assert draws[1_000:].mean() == pytest.approx(expected, rel=0.01)
