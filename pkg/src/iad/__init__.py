"""Contamination-robust anomaly detection via iteratively reweighted training.

Deep anomaly detectors assume clean training data; mixed-in anomalies
drag the learned notion of normality towards themselves. This package
wraps any of its base detectors (deep one-class hypersphere, autoencoder,
masked autoregressive flow) in an outer loop that scores the training
set, converts scores into per-sample importance weights, re-trains under
those weights, and selects the round whose score ranking has stabilised.
"""

from .data import Dataset, ScenarioSpec, build_scenario, load_csv, standardize, \
    synth_two_gaussian
from .detectors import Autoencoder, DeepSVDD, MaskedAutoregressiveFlow, \
    load_checkpoint, make_detector, save_checkpoint
from .estimator import IterativeAnomalyDetector
from .exceptions import ConfigurationError, DatasetError, TrainingAbortError, \
    UndefinedMetricError
from .iterate import EnsembleScorer, IadConfig, RoundRecord, run_ensemble_iad, run_iad
from .metrics import auc, eval_report, otsu_separability, pgr, weight_kde, \
    weight_trajectory
from .reweight import update_weights
from .rng import RngStream
from .termination import Criterion, rank_scores, select_round, termination_value

__version__ = "0.1.0"

__all__ = [
    "Autoencoder",
    "ConfigurationError",
    "Criterion",
    "Dataset",
    "DatasetError",
    "DeepSVDD",
    "EnsembleScorer",
    "IadConfig",
    "IterativeAnomalyDetector",
    "MaskedAutoregressiveFlow",
    "RngStream",
    "RoundRecord",
    "ScenarioSpec",
    "TrainingAbortError",
    "UndefinedMetricError",
    "auc",
    "build_scenario",
    "eval_report",
    "load_checkpoint",
    "load_csv",
    "make_detector",
    "otsu_separability",
    "pgr",
    "rank_scores",
    "run_ensemble_iad",
    "run_iad",
    "save_checkpoint",
    "select_round",
    "standardize",
    "synth_two_gaussian",
    "termination_value",
    "update_weights",
    "weight_kde",
    "weight_trajectory",
]
