"""Hypersphere-compactness detector (deep one-class classifier).

A bias-free feed-forward network maps inputs to a feature space; the
anomaly score of a sample is its squared distance to a fixed centre.
Training shrinks those distances, either for every sample (``one-class``
mode) or only outside a data-driven radius traded off by ``nu``
(``soft-boundary`` mode).

The layers carry no bias terms: with biases the compactness objective
admits a trivial constant-map solution, since the network could collapse
every input onto the centre regardless of its value.
"""

from __future__ import annotations

import numpy as np

from ..exceptions import ConfigurationError
from ..nn import IDENTITY, LEAKY_RELU, Dense, dense, network_backward, network_forward
from ..validation import check_scores
from .base import BaseDetector, default_hidden_dims

ONE_CLASS = "one-class"
SOFT_BOUNDARY = "soft-boundary"

CENTER_FLOOR = 0.1


def clamp_center(center: np.ndarray, floor: float = CENTER_FLOOR) -> np.ndarray:
    """Push near-zero coordinates to +/-floor, preserving sign (zero maps to +floor).

    Keeps the centre away from the origin, where a shrinking network
    could score every sample identically.
    """
    c = center.copy()
    small = np.abs(c) < floor
    c[small] = np.where(c[small] >= 0.0, floor, -floor)
    return c


class DeepSVDD(BaseDetector):
    """Deep one-class detector with a fixed hypersphere centre.

    Parameters
    ----------
    hidden : tuple of int or None
        Feature-network widths; None picks a default ladder from the
        input dimension.
    mode : {"one-class", "soft-boundary"}
        "one-class" penalises every sample's distance. "soft-boundary"
        penalises only distances beyond an adaptive radius, whose
        quantile level is set by ``nu``.
    nu : float
        Trade-off in (0, 1] between radius size and samples left outside
        (soft-boundary mode only).
    radius_warmup, radius_interval : int
        The squared radius is refreshed from the score quantile every
        ``radius_interval`` epochs once ``radius_warmup`` epochs have run.
    """

    def __init__(
        self,
        hidden=None,
        mode=ONE_CLASS,
        nu=0.1,
        slope=0.01,
        lr=1e-3,
        batch_size=128,
        weight_decay=1e-6,
        epochs=20,
        radius_warmup=10,
        radius_interval=5,
        seed=0,
    ):
        self.hidden = hidden
        self.mode = mode
        self.nu = nu
        self.slope = slope
        self.lr = lr
        self.batch_size = batch_size
        self.weight_decay = weight_decay
        self.epochs = epochs
        self.radius_warmup = radius_warmup
        self.radius_interval = radius_interval
        self.seed = seed

    def _clear_state(self):
        self._layers = None
        self.center_ = None
        self.radius_sq_ = 0.0

    def _build(self, X, rng):
        if self.mode not in (ONE_CLASS, SOFT_BOUNDARY):
            raise ConfigurationError(f"unknown mode {self.mode!r}")
        if self.mode == SOFT_BOUNDARY and not 0.0 < self.nu <= 1.0:
            raise ConfigurationError(f"nu must be in (0, 1], got {self.nu}")
        d = X.shape[1]
        widths = default_hidden_dims(d) if self.hidden is None else tuple(self.hidden)
        dims = (d, *widths)
        self._layers = []
        for i in range(len(dims) - 1):
            act = LEAKY_RELU if i < len(dims) - 2 else IDENTITY
            self._layers.append(
                dense(rng, dims[i], dims[i + 1], activation=act, bias=False,
                      slope=self.slope)
            )
        features = network_forward(self._layers, X)
        self.center_ = clamp_center(features.mean(axis=0))
        self.radius_sq_ = 0.0

    def _all_layers(self):
        return self._layers

    def _distances_sq(self, X):
        diff = network_forward(self._layers, X) - self.center_
        return np.sum(diff * diff, axis=1), diff

    def _score(self, X):
        return self._distances_sq(X)[0]

    def per_sample_loss(self, X):
        X = self._require_ready(X)
        f, _ = self._distances_sq(X)
        if self.mode == ONE_CLASS:
            return f
        return self.nu * self.radius_sq_ + np.maximum(0.0, f - self.radius_sq_)

    def _loss_and_param_grads(self, Xb, wb):
        self._zero_grads()
        f, diff = self._distances_sq(Xb)
        scale = wb / wb.shape[0]
        if self.mode == ONE_CLASS:
            loss = float(np.mean(wb * f))
            grad_features = (2.0 * scale)[:, None] * diff
        else:
            hinge = np.maximum(0.0, f - self.radius_sq_)
            loss = float(np.mean(wb * (self.nu * self.radius_sq_ + hinge)))
            active = (f > self.radius_sq_).astype(np.float64)
            grad_features = (2.0 * scale * active)[:, None] * diff
        network_backward(self._layers, grad_features)
        return loss, self._collect_loss_gradients()

    def update_radius(self, scores) -> float:
        """Set the squared radius to the (1 - nu) quantile of the scores."""
        s = check_scores(scores)
        self.radius_sq_ = float(np.quantile(s, 1.0 - self.nu, method="linear"))
        return self.radius_sq_

    def _after_epoch(self, X):
        if self.mode != SOFT_BOUNDARY:
            return
        past_warmup = self._epochs_seen >= self.radius_warmup
        if past_warmup and (self._epochs_seen - self.radius_warmup) % self.radius_interval == 0:
            self.update_radius(self._score(X))

    def _state_arrays(self):
        arrays = {"center": self.center_}
        for i, layer in enumerate(self._layers):
            arrays[f"layer_{i}_weight"] = layer.weight
        return arrays

    def _state_scalars(self):
        return {"n_layers": len(self._layers), "radius_sq": self.radius_sq_}

    def _restore(self, arrays, scalars):
        n_layers = int(scalars["n_layers"])
        self._layers = []
        for i in range(n_layers):
            act = LEAKY_RELU if i < n_layers - 1 else IDENTITY
            self._layers.append(
                Dense(arrays[f"layer_{i}_weight"].copy(), activation=act,
                      slope=self.slope)
            )
        self.center_ = arrays["center"].copy()
        self.radius_sq_ = float(scalars["radius_sq"])
