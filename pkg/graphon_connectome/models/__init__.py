"""Convenient imports for all model types."""

# Common types and enums
from .common import (
    DEFAULT_COVARIATES,
    OUTCOMES,
    LatentPrior,
    Outcome,
    edge_index,
    family_names,
    parse_family,
)

# Observations
from .dataset import ConnectomeDataset

# Evaluation
from .evaluation import ACCURACY_COLUMNS, AccuracyCell, EdgePredictions, PredictionScores

# Runs
from .run import DRAW_KEYS, McmcRun, RunConfig, Schedule, TraceRecord

# Simulation
from .simulation import AncovaFit, PredictionRow, StudyConfig, StudyReport, TruthSpec

# Parameters
from .state import Hyperparams, ModelState

# Summaries
from .summary import EFFECT_COLUMNS, EffectSummary, TuneEntry, TuneReport

__all__ = [
    # Common
    "DEFAULT_COVARIATES",
    "OUTCOMES",
    "LatentPrior",
    "Outcome",
    "edge_index",
    "family_names",
    "parse_family",
    # Observations
    "ConnectomeDataset",
    # Parameters
    "Hyperparams",
    "ModelState",
    # Runs
    "DRAW_KEYS",
    "McmcRun",
    "RunConfig",
    "Schedule",
    "TraceRecord",
    # Summaries
    "EFFECT_COLUMNS",
    "EffectSummary",
    "TuneEntry",
    "TuneReport",
    # Evaluation
    "ACCURACY_COLUMNS",
    "AccuracyCell",
    "EdgePredictions",
    "PredictionScores",
    # Simulation
    "AncovaFit",
    "PredictionRow",
    "StudyConfig",
    "StudyReport",
    "TruthSpec",
]
