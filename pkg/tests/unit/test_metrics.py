"""Tests for accuracy and prediction metrics."""

import math

import numpy as np
import pytest

from graphon_connectome.exceptions import SummaryError
from graphon_connectome.metrics import accuracy, prediction_metrics
from graphon_connectome.models import ConnectomeDataset, EdgePredictions
from graphon_connectome.posterior import count_loglik_entries


class TestAccuracy:
    """Test the bias-variance decomposition over replications."""

    def test_exact_estimates(self):
        """Test that estimates equal to the truth score zero."""
        truth = np.array([0.5, -1.0, 2.0])
        cell = accuracy([truth, truth, truth], truth, family="mu0", method="bayes")
        assert cell.bias2 == 0.0 and cell.variance == 0.0 and cell.mse == 0.0
        assert cell.n_entries == 3
        assert (cell.family, cell.method) == ("mu0", "bayes")

    def test_symmetric_spread(self):
        """Test unbiased estimates one unit either side of the truth."""
        truth = np.array([0.0, 3.0])
        cell = accuracy([truth + 1, truth - 1], truth)
        assert cell.bias2 == pytest.approx(0.0)
        assert cell.variance == pytest.approx(2.0)
        assert cell.mse == pytest.approx(2.0)

    def test_missing_entries_skipped(self):
        """Test the entry-wise average with a missing estimate."""
        truth = np.array([0.0, 0.0])
        estimates = [np.array([1.0, 2.0]), np.array([3.0, np.nan]), np.array([5.0, 4.0])]
        cell = accuracy(estimates, truth)
        # entry 0: mean 3, var 4; entry 1: mean 3, var 2
        assert cell.bias2 == pytest.approx(9.0)
        assert cell.variance == pytest.approx(3.0)
        assert cell.n_entries == 2

    def test_entry_with_one_replication_dropped(self):
        """Test that an entry present once does not count."""
        truth = np.zeros(2)
        cell = accuracy([np.array([1.0, np.nan]), np.array([1.0, 7.0])], truth)
        assert cell.n_entries == 1
        assert cell.bias2 == pytest.approx(1.0)

    def test_fully_missing_replication_changes_nothing(self):
        """Test that an all-NaN replication leaves the cell alone."""
        rng = np.random.default_rng(0)
        truth = rng.standard_normal(6)
        estimates = list(truth + rng.standard_normal((4, 6)))
        base = accuracy(estimates, truth)
        padded = accuracy(estimates + [np.full(6, np.nan)], truth)
        assert padded.bias2 == pytest.approx(base.bias2)
        assert padded.variance == pytest.approx(base.variance)
        assert padded.n_entries == base.n_entries

    def test_replication_order_irrelevant(self):
        """Test invariance to permuting replications."""
        rng = np.random.default_rng(1)
        truth = rng.standard_normal(5)
        estimates = truth + rng.standard_normal((6, 5))
        a = accuracy(estimates, truth)
        b = accuracy(estimates[::-1], truth)
        assert a.mse == pytest.approx(b.mse, rel=1e-12)

    def test_errors(self):
        """Test shape mismatch and too few replications."""
        with pytest.raises(SummaryError):
            accuracy([np.zeros(3), np.zeros(3)], np.zeros(4))
        with pytest.raises(SummaryError):
            accuracy([np.zeros(3)], np.zeros(3))


class TestPredictionMetrics:
    """Test held-out scores."""

    def test_scores(self, tiny_dataset):
        """Test MSE over connected edges and the mean per-subject log-likelihood."""
        data = tiny_dataset
        mu = np.where(data.observed, data.log_lengths, 0.0) + 0.1
        loglik = np.array([[-1.0, -2.0, -3.0], [-0.5, -0.5, -1.0]])
        scores = prediction_metrics(EdgePredictions(mu=mu, count_loglik=loglik), data)
        assert scores.length_mse == pytest.approx(0.01)
        assert scores.count_mean_loglik == pytest.approx(-4.0)
        assert scores.n_length_edges == 4

    def test_zero_inflated_poisson_entry(self):
        """Test a certain-presence entry against the Poisson mass by hand."""
        value = count_loglik_entries(np.array([40.0]), np.array([math.log(2.0)]), np.array([2]))
        assert value[0] == pytest.approx(math.log(2 * math.exp(-2)))

    def test_empty_heldout(self):
        """Test that an empty held-out set is refused."""
        data = ConnectomeDataset.empty(["a", "b", "c"])
        empty = np.zeros((0, 3))
        with pytest.raises(SummaryError):
            prediction_metrics(EdgePredictions(mu=empty, count_loglik=empty), data)

    def test_shape_mismatch(self, tiny_dataset):
        """Test that predictions must match the held-out shape."""
        wrong = np.zeros((1, 3))
        with pytest.raises(SummaryError):
            prediction_metrics(EdgePredictions(mu=wrong, count_loglik=wrong), tiny_dataset)
