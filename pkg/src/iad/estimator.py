"""Estimator facade over the iterative loop.

Wraps any base detector in the fit/decision_function surface so the whole
procedure (iterative reweighting, termination, round selection, optional
ensembling) composes with sklearn-style tooling: ``get_params`` /
``set_params`` / ``clone`` all work, and the wrapped detector is itself a
parameter.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, clone

from .detectors import Autoencoder
from .iterate import IadConfig, run_ensemble_iad, run_iad
from .validation import check_matrix


class IterativeAnomalyDetector(BaseEstimator):
    """Contamination-robust wrapper around a base anomaly detector.

    Parameters
    ----------
    detector : BaseDetector, optional
        Prototype detector; it is cloned before training (default:
        ``Autoencoder()``).
    rounds, epochs : int
        Reweighted rounds after the base round, and epochs per round.
    inv_tau : float
        Reciprocal temperature of the weight update.
    partition : float
        Percentile pivot used by the rank-crossing criterion.
    warm_start : bool
        Continue training the same parameters across rounds (True) or
        re-initialise every round (False).
    fresh_optimizer : bool
        Restart the optimizer's moment accumulators at round boundaries
        while keeping the parameters (only meaningful with warm_start).
    criterion : str
        Round-selection rule: ``rank-cross``, ``fixed-K``, ``last`` or
        ``otsu``.
    ensemble : int or None
        When set, train this many members on independent sub-datasets and
        drive the loop with their median-scaled average score.
    subsample : float
        Sub-dataset fraction per ensemble member.
    seed : int
        Run seed; all randomness derives from it.

    Attributes
    ----------
    history_ : list of RoundRecord
    selected_round_ : int
    decision_scores_ : anomaly scores of the training data at the
        selected round (higher = more anomalous).
    """

    def __init__(
        self,
        detector=None,
        rounds=15,
        epochs=10,
        inv_tau=4.0,
        partition=0.5,
        warm_start=True,
        fresh_optimizer=False,
        criterion="rank-cross",
        ensemble=None,
        subsample=0.8,
        seed=0,
    ):
        self.detector = detector
        self.rounds = rounds
        self.epochs = epochs
        self.inv_tau = inv_tau
        self.partition = partition
        self.warm_start = warm_start
        self.fresh_optimizer = fresh_optimizer
        self.criterion = criterion
        self.ensemble = ensemble
        self.subsample = subsample
        self.seed = seed

    def _make_config(self) -> IadConfig:
        return IadConfig(
            rounds=self.rounds,
            epochs=self.epochs,
            inv_tau=self.inv_tau,
            partition=self.partition,
            warm_start=self.warm_start,
            fresh_optimizer=self.fresh_optimizer,
            criterion=self.criterion,
        )

    def fit(self, X, y=None):
        """Run the iterative loop on X. ``y`` is ignored (API compatibility)."""
        X = check_matrix(X)
        prototype = self.detector if self.detector is not None else Autoencoder()
        config = self._make_config()
        if self.ensemble:
            result = run_ensemble_iad(
                X,
                lambda: clone(prototype),
                n_members=self.ensemble,
                subsample=self.subsample,
                config=config,
                seed=self.seed,
            )
            self.scorer_ = result.scorer
        else:
            fitted = clone(prototype)
            result = run_iad(X, fitted, config=config, seed=self.seed)
            self.scorer_ = fitted
        self.result_ = result
        self.history_ = result.history
        self.selected_round_ = result.selected_round
        self.decision_scores_ = result.selected.scores
        self.n_features_in_ = X.shape[1]
        return self

    def decision_function(self, X) -> np.ndarray:
        """Anomaly scores from the selected round's model (higher = worse)."""
        if not hasattr(self, "scorer_"):
            raise RuntimeError("not fitted; call fit first")
        return self.scorer_.score_all(check_matrix(X))

    def score_all(self, X) -> np.ndarray:
        return self.decision_function(X)
