"""Reconstruction-error detector.

An encoder compresses inputs through a width ladder into a latent code
and a mirror-symmetric decoder maps the code back; the anomaly score of
a sample is its squared reconstruction error.
"""

from __future__ import annotations

import numpy as np

from ..nn import IDENTITY, LEAKY_RELU, Dense, dense, network_backward, network_forward
from .base import BaseDetector, default_hidden_dims


class Autoencoder(BaseDetector):
    """Mirror-symmetric MLP autoencoder scored by reconstruction error.

    ``hidden`` gives the encoder widths (last entry is the latent width);
    the decoder mirrors them back up to the input dimension.
    """

    def __init__(
        self,
        hidden=None,
        slope=0.01,
        lr=1e-3,
        batch_size=128,
        weight_decay=1e-6,
        epochs=20,
        seed=0,
    ):
        self.hidden = hidden
        self.slope = slope
        self.lr = lr
        self.batch_size = batch_size
        self.weight_decay = weight_decay
        self.epochs = epochs
        self.seed = seed

    def _clear_state(self):
        self._layers = None

    def _build(self, X, rng):
        d = X.shape[1]
        widths = default_hidden_dims(d) if self.hidden is None else tuple(self.hidden)
        dims = (d, *widths, *widths[-2::-1], d)
        self._layers = []
        for i in range(len(dims) - 1):
            act = LEAKY_RELU if i < len(dims) - 2 else IDENTITY
            self._layers.append(
                dense(rng, dims[i], dims[i + 1], activation=act, slope=self.slope)
            )

    def _all_layers(self):
        return self._layers

    def reconstruct(self, X) -> np.ndarray:
        X = self._require_ready(X)
        return network_forward(self._layers, X)

    def _score(self, X):
        residual = network_forward(self._layers, X) - X
        return np.sum(residual * residual, axis=1)

    def per_sample_loss(self, X):
        return self.score_all(X)

    def _loss_and_param_grads(self, Xb, wb):
        self._zero_grads()
        residual = network_forward(self._layers, Xb) - Xb
        loss = float(np.mean(wb * np.sum(residual * residual, axis=1)))
        grad_out = (2.0 * wb / wb.shape[0])[:, None] * residual
        network_backward(self._layers, grad_out)
        return loss, self._collect_loss_gradients()

    def _state_arrays(self):
        arrays = {}
        for i, layer in enumerate(self._layers):
            arrays[f"layer_{i}_weight"] = layer.weight
            arrays[f"layer_{i}_bias"] = layer.bias
        return arrays

    def _state_scalars(self):
        return {"n_layers": len(self._layers)}

    def _restore(self, arrays, scalars):
        n_layers = int(scalars["n_layers"])
        self._layers = []
        for i in range(n_layers):
            act = LEAKY_RELU if i < n_layers - 1 else IDENTITY
            self._layers.append(
                Dense(
                    arrays[f"layer_{i}_weight"].copy(),
                    bias=arrays[f"layer_{i}_bias"].copy(),
                    activation=act,
                    slope=self.slope,
                )
            )
