"""Pytest configuration and fixtures for testing."""

import os
from pathlib import Path

import numpy as np
import pytest

from graphon_connectome import config
from graphon_connectome.models import (
    ConnectomeDataset,
    Hyperparams,
    McmcRun,
    ModelState,
    Schedule,
)
from graphon_connectome.models.run import empty_draws
from graphon_connectome.splines import uniform_config

REPO_ROOT = Path(__file__).resolve().parent.parent
DEMO_DIR = REPO_ROOT / "data" / "demo"


def pytest_collection_modifyitems(config, items):
    """Skip tests marked slow unless GRAPHON_RUN_SLOW=1."""
    if os.environ.get("GRAPHON_RUN_SLOW") == "1":
        return
    skip_slow = pytest.mark.skip(reason="set GRAPHON_RUN_SLOW=1 to run slow checks")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(autouse=True)
def fresh_settings(monkeypatch):
    """Drop the cached settings so environment changes take effect."""
    monkeypatch.setattr(config, "_settings", None)
    yield
    config._settings = None


@pytest.fixture
def demo_paths():
    """Edge and covariate files of the bundled demo dataset."""
    return DEMO_DIR / "edges.csv", DEMO_DIR / "covariates.csv"


@pytest.fixture
def tiny_dataset():
    """Two subjects over three regions, built by hand."""
    counts = np.array([[3, 0, 1], [0, 2, 5]])
    lengths = np.array([[12.0, np.nan, 30.5], [np.nan, 8.25, 20.0]])
    covariates = np.array(
        [
            [1.0, 0.0, 1.0, -2.5],
            [0.0, 1.0, 0.0, 2.5],
        ]
    )
    return ConnectomeDataset(
        subject_ids=["s01", "s02"],
        region_names=["r01", "r02", "r03"],
        counts=counts,
        lengths=lengths,
        covariates=covariates,
    )


@pytest.fixture
def small_hyper():
    """Hyperparameters with the smallest legal basis."""
    return Hyperparams(K=4)


@pytest.fixture
def zero_state(tiny_dataset):
    """All-zero state sized for the tiny dataset."""
    data = tiny_dataset
    return ModelState.zeros(uniform_config(4), data.n, data.J, data.d, data.E)


@pytest.fixture
def random_state(tiny_dataset):
    """Moderate random state sized for the tiny dataset."""
    data = tiny_dataset
    rng = np.random.default_rng(11)
    state = ModelState.zeros(uniform_config(4), data.n, data.J, data.d, data.E)
    P = state.theta.shape[1]
    return state.updated(
        theta=0.3 * rng.standard_normal((3, P)),
        gamma=0.1 * rng.standard_normal((3, data.d, P)),
        xi=rng.uniform(0.1, 0.9, data.J),
        delta=rng.uniform(0.1, 0.9, data.J),
        indicator=np.array([1, 0, 1], dtype=np.int8),
        eta=0.2 * rng.standard_normal((3, data.n)),
        tau2=np.full((3, data.n), 0.5),
        labels=np.zeros((3, data.n), dtype=int),
        alpha=np.ones(3),
        sigma2=0.4,
        inflation=data.observed.astype(np.int8),
    )


def make_run(
    theta: np.ndarray,
    *,
    J: int = 3,
    n: int = 2,
    d: int = 4,
    K: int = 4,
    gamma: np.ndarray | None = None,
    random_effects: bool = False,
    chains: np.ndarray | None = None,
) -> McmcRun:
    """Posterior run with the given coefficient draws and fixed latents."""
    S, _, P = theta.shape
    basis = uniform_config(K)
    E = J * (J - 1) // 2
    draws = empty_draws(P, d, J, n)
    draws.update(
        theta=theta,
        gamma=gamma if gamma is not None else np.zeros((S, 3, d, P)),
        xi=np.tile(np.linspace(0.1, 0.9, J), (S, 1)),
        delta=np.tile(np.linspace(0.2, 0.8, J), (S, 1)),
        indicator=np.ones((S, J), dtype=np.int8),
        eta=np.zeros((S, 3, n)),
        tau2=np.ones((S, 3, n)),
        labels=np.zeros((S, 3, n), dtype=int),
        alpha=np.ones((S, 3)),
        sigma2=np.full(S, 0.25),
        log_posterior=np.zeros(S),
        chain=chains if chains is not None else np.zeros(S, dtype=int),
    )
    return McmcRun(
        hyper=Hyperparams(K=K, random_effects=random_effects),
        schedule=Schedule(burn_in=0, samples=S),
        region_names=[f"r{j + 1:02d}" for j in range(J)],
        covariate_names=["mci", "ad", "male", "age"][:d] if d == 4 else [f"z{a + 1}" for a in range(d)],
        subject_ids=[f"s{i + 1:04d}" for i in range(n)],
        draws=draws,
        final_state=ModelState.zeros(basis, n, J, d, E),
    )
