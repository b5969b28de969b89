"""Slow desk-scale checks of the simulation study and basis-size tuning.

The study runs J=20, n=500, five replications with 1000 + 1000 iterations and
takes hours; tuning runs ten seeded searches over K = 7..20.
"""

from pathlib import Path

import pytest
import yaml

from graphon_connectome.inference import tune_basis_size
from graphon_connectome.models import DEFAULT_COVARIATES, StudyConfig
from graphon_connectome.models.common import covariate_family_names
from graphon_connectome.simulate import generate_dataset, run_study

pytestmark = [pytest.mark.eval, pytest.mark.slow]

CONFIGS = Path(__file__).resolve().parents[2] / "configs"


@pytest.fixture(scope="module")
def desk_report():
    """The desk-scale Bayes versus ANCOVA study."""
    config = StudyConfig.model_validate(
        yaml.safe_load((CONFIGS / "study_desk.yaml").read_text())
    )
    return run_study(config)


class TestEstimationAccuracy:
    """Graphon estimates should beat per-edge regressions by a wide margin."""

    def test_bayes_halves_ancova_mse(self, desk_report):
        """Test Bayes MSE below half the ANCOVA MSE in 10 of 12 effect families."""
        cells = {(c.family, c.method): c for c in desk_report.accuracy[500]}
        families = covariate_family_names(DEFAULT_COVARIATES)
        assert len(families) == 12
        wins = sum(
            cells[(f, "bayes")].mse < 0.5 * cells[(f, "ancova")].mse for f in families
        )
        assert wins >= 10


class TestHeldOutPrediction:
    """Held-out scores should favour the graphon fit in most replications."""

    def test_length_mse_lower(self, desk_report):
        """Test lower held-out length MSE in at least four of five replications."""
        frame = desk_report.prediction_frame().pivot(
            index="replication", columns="method", values="length_mse"
        )
        assert len(frame) == 5
        assert (frame["bayes"] < frame["ancova"]).sum() >= 4

    def test_count_loglik_higher(self, desk_report):
        """Test higher held-out count log-likelihood in at least four of five replications."""
        frame = desk_report.prediction_frame().pivot(
            index="replication", columns="method", values="count_mean_loglik"
        )
        assert (frame["bayes"] > frame["ancova"]).sum() >= 4


class TestTuningRecovery:
    """AIC tuning on synthetic data should settle on seven basis functions."""

    def test_selects_seven(self):
        """Test that K = 7 is chosen in at least eight of ten seeded runs."""
        chosen = []
        for seed in range(10):
            data, _ = generate_dataset(J=20, n=200, seed=seed)
            report = tune_basis_size(data, grid=list(range(7, 21)), seed=seed)
            chosen.append(report.chosen_K)
        assert chosen.count(7) >= 8, chosen
