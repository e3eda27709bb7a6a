"""Shared training engine and state handling for the base detectors.

Every detector follows one protocol: ``reset`` builds fresh parameters
from a seeded stream, ``train_epoch`` runs one shuffled pass of weighted
mini-batch gradient descent, ``score_all`` produces per-sample anomaly
scores where larger means more anomalous. The iterative loop drives
detectors through this protocol; ``fit``/``decision_function`` give the
same models a standalone estimator surface.

Architecture is built lazily on first contact with data (input width is
read off the batch), so a detector can be constructed, cloned and
re-seeded without a dataset in hand.
"""

from __future__ import annotations

from abc import abstractmethod

import numpy as np
from sklearn.base import BaseEstimator

from ..exceptions import TrainingAbortError
from ..nn import collect_gradients, collect_parameters, zero_grads
from ..optim import Adam
from ..rng import RngStream, as_generator
from ..validation import check_matrix, check_weights


def default_hidden_dims(d: int) -> tuple[int, ...]:
    """Feature-width ladder for tabular inputs, chosen by input dimension."""
    if d >= 128:
        return (128, 64, 32)
    if d > 20:
        return (32, 16, 8)
    return (32, 16, 4)


class BaseDetector(BaseEstimator):
    """Common plumbing: batching, shuffling, the optimizer, checkpoints.

    Subclasses implement ``_build`` (construct layers for a given input
    width), ``_loss_and_param_grads`` (batch loss and gradients),
    ``_score`` and ``per_sample_loss``.
    """

    def reset(self, rng: RngStream | np.random.Generator | None = None):
        """Drop all learned state and re-seed the detector's stream."""
        if rng is None:
            rng = RngStream(getattr(self, "seed", 0), 0)
        self._rng = as_generator(rng)
        self.reset_optimizer()
        self._epochs_seen = 0
        self._built = False
        self._clear_state()
        return self

    def reset_optimizer(self):
        """Fresh moment accumulators; parameters and rng are untouched.

        Used at round boundaries of the iterative loop: moments estimated
        under the previous round's weights would otherwise keep pushing
        along gradient directions belonging to samples that have since
        been downweighted.
        """
        self._optimizer = Adam(lr=self.lr, weight_decay=self.weight_decay)
        return self

    def _require_ready(self, X: np.ndarray) -> np.ndarray:
        X = check_matrix(X)
        if not hasattr(self, "_rng"):
            self.reset()
        if not self._built:
            self._build(X, self._rng)
            self._built = True
        return X

    def train_epoch(self, X, sample_weight=None) -> float:
        """One shuffled pass minimising (1/|B|) sum_{i in B} w_i l(x_i).

        Returns the weighted mean loss over the epoch. Raises
        ``TrainingAbortError`` if any batch loss or gradient goes
        non-finite.
        """
        X = self._require_ready(X)
        n = X.shape[0]
        w = np.ones(n) if sample_weight is None else check_weights(sample_weight, n)
        order = self._rng.permutation(n)
        params = self.parameters()
        total = 0.0
        # divergence surfaces as an explicit abort, not a numpy warning
        with np.errstate(over="ignore", invalid="ignore"):
            for start in range(0, n, self.batch_size):
                idx = order[start : start + self.batch_size]
                loss, grads = self._loss_and_param_grads(X[idx], w[idx])
                if not np.isfinite(loss):
                    raise TrainingAbortError(
                        f"{type(self).__name__}: non-finite loss at epoch "
                        f"{self._epochs_seen + 1}, batch offset {start}"
                    )
                self._optimizer.step(params, grads)
                total += loss * idx.size
        self._epochs_seen += 1
        self._after_epoch(X)
        return total / n

    def score_all(self, X) -> np.ndarray:
        """Anomaly scores for every row; deterministic for fixed parameters."""
        X = self._require_ready(X)
        return self._score(X)

    # -- standalone estimator surface -------------------------------------

    def fit(self, X, y=None):
        """Train for ``self.epochs`` epochs with unit weights.

        ``y`` is ignored; it exists for pipeline compatibility only.
        """
        self.reset(RngStream(self.seed, 0))
        X = check_matrix(X)
        for _ in range(self.epochs):
            self.train_epoch(X)
        self.n_features_in_ = X.shape[1]
        self.decision_scores_ = self.score_all(X)
        return self

    def decision_function(self, X) -> np.ndarray:
        """Anomaly scores (higher = more anomalous) for fitted estimators."""
        if not getattr(self, "_built", False):
            raise RuntimeError(f"{type(self).__name__} is not fitted; call fit first")
        return self.score_all(X)

    # -- gradients (used by the finite-difference checker) -----------------

    def parameters(self) -> list[np.ndarray]:
        return collect_parameters(self._all_layers())

    def loss_gradients(self, X, sample_weight) -> list[np.ndarray]:
        X = self._require_ready(X)
        w = check_weights(sample_weight, X.shape[0])
        _, grads = self._loss_and_param_grads(X, w)
        return grads

    def weighted_loss(self, X, sample_weight) -> float:
        X = self._require_ready(X)
        w = check_weights(sample_weight, X.shape[0])
        per_sample = self.per_sample_loss(X)
        return float(np.mean(w * per_sample))

    def _collect_loss_gradients(self) -> list[np.ndarray]:
        return collect_gradients(self._all_layers())

    def _zero_grads(self) -> None:
        zero_grads(self._all_layers())

    # -- state snapshots ----------------------------------------------------

    def get_state(self) -> dict:
        """Copy of all learned parameters, sufficient to rebuild the model."""
        if not getattr(self, "_built", False):
            raise RuntimeError("detector has no state before it sees data")
        return {
            "class": type(self).__name__,
            "params": self.get_params(),
            "arrays": {k: v.copy() for k, v in self._state_arrays().items()},
            "scalars": self._state_scalars(),
        }

    def set_state(self, state: dict):
        """Rebuild the model from a snapshot; bit-exact restore."""
        if state["class"] != type(self).__name__:
            raise ValueError(
                f"snapshot is for {state['class']}, not {type(self).__name__}"
            )
        if not hasattr(self, "_rng"):
            self.reset()
        self._restore(state["arrays"], state["scalars"])
        self._built = True
        return self

    # -- subclass hooks -------------------------------------------------------

    def _after_epoch(self, X: np.ndarray) -> None:
        pass

    def _clear_state(self) -> None:
        pass

    @abstractmethod
    def _build(self, X: np.ndarray, rng: np.random.Generator) -> None: ...

    @abstractmethod
    def _all_layers(self): ...

    @abstractmethod
    def _loss_and_param_grads(self, Xb, wb): ...

    @abstractmethod
    def _score(self, X) -> np.ndarray: ...

    @abstractmethod
    def per_sample_loss(self, X) -> np.ndarray: ...

    @abstractmethod
    def _state_arrays(self) -> dict: ...

    @abstractmethod
    def _state_scalars(self) -> dict: ...

    @abstractmethod
    def _restore(self, arrays: dict, scalars: dict) -> None: ...
