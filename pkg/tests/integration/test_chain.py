"""Integration tests for the chain driver."""

import numpy as np
import pytest

from graphon_connectome.exceptions import ConfigError
from graphon_connectome.models import DRAW_KEYS, Hyperparams, Schedule
from graphon_connectome.samplers import ChainRunner, HmcConfig, resume_chain, run_chain, run_chains
from graphon_connectome.simulate import generate_dataset

CFG = HmcConfig(adapt_window=2, leapfrog_steps=5)


@pytest.fixture(scope="module")
def data():
    """Small generated dataset with subject random effects."""
    dataset, _ = generate_dataset(J=4, n=12, seed=2, random_effect_sd=0.3)
    return dataset


@pytest.fixture
def hyper():
    return Hyperparams(K=4)


def assert_same_draws(a, b):
    for key in DRAW_KEYS:
        np.testing.assert_array_equal(a.draws[key], b.draws[key])


class TestRunChain:
    """Test single-chain runs."""

    def test_deterministic(self, data, hyper):
        """Test that one seed gives bit-identical draws."""
        schedule = Schedule(burn_in=4, samples=4, seed=9)
        first = run_chain(data, hyper, schedule, CFG)
        second = run_chain(data, hyper, schedule, CFG)
        assert_same_draws(first, second)
        assert first.n_samples == 4

    def test_draws_are_valid(self, data, hyper):
        """Test support and shape of the kept draws."""
        run = run_chain(data, hyper, Schedule(burn_in=4, samples=6, thin=2, seed=1), CFG)
        assert run.n_samples == 3
        assert run.draws["theta"].shape == (3, 3, 10)
        assert np.all((run.draws["xi"] > 0) & (run.draws["xi"] < 1))
        assert np.all(run.draws["sigma2"] > 0)
        assert np.all(run.draws["tau2"] > 0)
        assert set(run.acceptance) == {"xi", "delta", "count_coefficients", "count_effects"}
        assert all(0.0 <= rate <= 1.0 for rate in run.acceptance.values())
        phases = {record.phase for record in run.trace}
        assert phases == {"burn_in", "sampling"}

    def test_no_samples(self, data, hyper):
        """Test that a burn-in-only run keeps nothing."""
        run = run_chain(data, hyper, Schedule(burn_in=2, samples=0), CFG)
        assert run.n_samples == 0
        assert run.final_state.n == data.n

    def test_without_random_effects(self, data):
        """Test that switching effects off keeps them at zero."""
        hyper = Hyperparams(K=4, random_effects=False)
        run = run_chain(data, hyper, Schedule(burn_in=2, samples=3), CFG)
        assert np.all(run.draws["eta"] == 0)
        assert "count_effects" not in run.acceptance


class TestCheckpoints:
    """Test interruption and resumption."""

    def test_resume_is_bit_identical(self, data, hyper, tmp_path):
        """Test that a crash and resume reproduces the uninterrupted chain."""
        schedule = Schedule(burn_in=4, samples=6, seed=5)
        reference = run_chain(data, hyper, schedule, CFG)

        runner = ChainRunner(
            data, hyper, schedule, CFG, checkpoint_dir=tmp_path, checkpoint_every=4
        )
        original = runner._sweep
        calls = {"count": 0}

        def crashing_sweep(*args, **kwargs):
            calls["count"] += 1
            if calls["count"] == 7:
                raise RuntimeError("simulated crash")
            return original(*args, **kwargs)

        runner._sweep = crashing_sweep
        with pytest.raises(RuntimeError):
            runner.start()
        assert (tmp_path / "chain0.json").exists()

        resumed = resume_chain(tmp_path, data, hyper, schedule, CFG, checkpoint_every=4)
        assert_same_draws(reference, resumed)
        assert resumed.acceptance == reference.acceptance
        assert resumed.step_sizes == reference.step_sizes

    def test_resume_rejects_other_schedule(self, data, hyper, tmp_path):
        """Test that a checkpoint only resumes its own configuration."""
        schedule = Schedule(burn_in=2, samples=2, seed=5)
        run_chain(data, hyper, schedule, CFG, checkpoint_dir=tmp_path, checkpoint_every=2)
        other = schedule.model_copy(update={"samples": 3})
        with pytest.raises(ConfigError):
            resume_chain(tmp_path, data, hyper, other, CFG)


class TestRunChains:
    """Test multi-chain runs."""

    def test_two_chains(self, data, hyper):
        """Test that chains are concatenated and differ."""
        run = run_chains(data, hyper, Schedule(burn_in=2, samples=3, chains=2, seed=4), CFG)
        assert run.n_samples == 6
        assert run.draws["chain"].tolist() == [0, 0, 0, 1, 1, 1]
        assert not np.array_equal(run.draws["theta"][:3], run.draws["theta"][3:])
