"""Tests for the in-process sampler metrics."""

import pytest

from graphon_connectome.samplers import SamplerMetrics


class TestSamplerMetrics:
    """Test the sampler metrics registry."""

    def test_window_acceptance(self):
        """Test window acceptance counting and reset."""
        metrics = SamplerMetrics()
        for accepted in (True, True, False, True):
            metrics.observe_proposal("xi", accepted, 0.1)
        assert metrics.window_acceptance("xi") == pytest.approx(0.75)
        metrics.reset_window("xi")
        assert metrics.window_acceptance("xi") == 0.0
        assert metrics.proposals["xi"] == 4

    def test_unknown_block(self):
        """Test that an untouched block reports zero acceptance."""
        assert SamplerMetrics().window_acceptance("delta") == 0.0

    def test_block_stats(self):
        """Test the per-block summary."""
        metrics = SamplerMetrics()
        metrics.observe_proposal("delta", True, -0.2)
        metrics.observe_proposal("delta", False, float("nan"))
        metrics.inc_nonfinite("delta")
        stats = metrics.get_block_stats("delta")
        assert stats["proposals"] == 2
        assert stats["acceptances"] == 1
        assert stats["accept_rate"] == 0.5
        assert stats["nonfinite"] == 1
        assert stats["mean_abs_delta_h"] == pytest.approx(0.2)

    def test_reset_totals_keeps_window(self):
        """Test that clearing totals leaves the current window alone."""
        metrics = SamplerMetrics()
        metrics.observe_proposal("xi", True, 0.0)
        metrics.reset_totals()
        assert metrics.proposals.get("xi", 0) == 0
        assert metrics.window_acceptance("xi") == 1.0

    def test_step_and_cluster_history(self):
        """Test that step sizes and cluster counts are recorded in order."""
        metrics = SamplerMetrics()
        metrics.observe_step_size("xi", 0, 0.05)
        metrics.observe_step_size("xi", 100, 0.04)
        metrics.observe_clusters("length", 3)
        assert metrics.step_history["xi"] == [(0, 0.05), (100, 0.04)]
        assert metrics.cluster_counts["length"] == [3]
