"""Density-estimation detector built from masked autoregressive blocks.

Each block is a masked two-layer network that emits a per-dimension
shift ``mu`` and log-scale ``a``; the block maps its input ``y`` to
``u = (y - mu) * exp(-a)``. The masks force ``mu_i`` and ``a_i`` to
depend only on dimensions ordered before ``i``, so the block Jacobian is
triangular with diagonal ``exp(-a)`` and log-determinant ``-sum(a)``.
Chaining blocks (with the dimension ordering flipped block to block) and
a standard-Gaussian base density gives an exact log-likelihood by the
change-of-variables formula.

Anomaly scores default to the negative *log*-likelihood: the raw
likelihood of the change-of-variables formula underflows for more than a
few dozen dimensions, and the log is a strictly monotone transform, so
score rankings (and thus AUC) are unchanged. ``score_space="likelihood"``
restores the literal negative likelihood for low-dimensional use.
"""

from __future__ import annotations

import numpy as np

from ..exceptions import ConfigurationError, TrainingAbortError
from ..nn import IDENTITY, LEAKY_RELU, Dense, dense, network_backward, network_forward
from .base import BaseDetector

LOG_2PI = float(np.log(2.0 * np.pi))


def autoregressive_masks(d: int, hidden: int, reverse: bool):
    """Connection masks enforcing a strict autoregressive order.

    Input dimension j carries degree j+1 (or d-j when ``reverse``);
    hidden units cycle through degrees 1..d-1. A hidden unit may read
    inputs with degree <= its own; the outputs for dimension i (both the
    shift and the log-scale, degree of i) may read hidden units with
    degree strictly below. For d = 1 no input connection is legal and
    the block output is a pure bias.
    """
    in_deg = np.arange(1, d + 1)
    if reverse:
        in_deg = in_deg[::-1].copy()
    if d == 1:
        hid_deg = np.zeros(hidden, dtype=np.int64)
    else:
        hid_deg = (np.arange(hidden) % (d - 1)) + 1
    mask_in = (hid_deg[:, None] >= in_deg[None, :]).astype(np.float64)
    out_deg = np.concatenate([in_deg, in_deg])
    mask_out = (out_deg[:, None] > hid_deg[None, :]).astype(np.float64)
    return mask_in, mask_out, in_deg


class MaskedAutoregressiveFlow(BaseDetector):
    """Stack of masked autoregressive blocks over a standard Gaussian base.

    Parameters
    ----------
    n_blocks : int
        Number of autoregressive blocks; orderings alternate between the
        natural and reversed dimension order.
    hidden_units : int
        Width of each block's single hidden layer.
    score_space : {"log", "likelihood"}
        Anomaly score as negative log-likelihood (default) or literal
        negative likelihood.
    """

    def __init__(
        self,
        n_blocks=5,
        hidden_units=32,
        slope=0.01,
        score_space="log",
        lr=1e-3,
        batch_size=128,
        weight_decay=1e-6,
        epochs=20,
        seed=0,
    ):
        self.n_blocks = n_blocks
        self.hidden_units = hidden_units
        self.slope = slope
        self.score_space = score_space
        self.lr = lr
        self.batch_size = batch_size
        self.weight_decay = weight_decay
        self.epochs = epochs
        self.seed = seed

    def _clear_state(self):
        self._blocks = None
        self._d = None

    def _build(self, X, rng):
        if self.score_space not in ("log", "likelihood"):
            raise ConfigurationError(f"unknown score_space {self.score_space!r}")
        if self.n_blocks < 1:
            raise ConfigurationError("need at least one block")
        self._d = X.shape[1]
        self._blocks = [
            self._make_block(self._d, k % 2 == 1, rng) for k in range(self.n_blocks)
        ]

    def _make_block(self, d, reverse, rng):
        mask_in, mask_out, _ = autoregressive_masks(d, self.hidden_units, reverse)
        first = dense(
            rng, d, self.hidden_units, activation=LEAKY_RELU, mask=mask_in,
            slope=self.slope,
        )
        # zero-initialised output layer: the block starts as the identity
        # map (mu = 0, a = 0), which keeps early training stable
        last = Dense(
            np.zeros((2 * d, self.hidden_units)),
            bias=np.zeros(2 * d),
            mask=mask_out,
            activation=IDENTITY,
        )
        return [first, last]

    def _all_layers(self):
        return [layer for block in self._blocks for layer in block]

    # -- density -----------------------------------------------------------

    def _flow_forward(self, X):
        """Map data to the base space, caching per-block intermediates."""
        d = self._d
        u = X
        log_scale_sum = np.zeros(X.shape[0])
        cache = []
        for block in self._blocks:
            out = network_forward(block, u)
            mu, a = out[:, :d], out[:, d:]
            if not np.all(np.isfinite(a)):
                raise TrainingAbortError(
                    "non-finite log-scale in flow block; training diverged"
                )
            with np.errstate(over="ignore"):
                e = np.exp(-a)
            u_next = (u - mu) * e
            cache.append((e, u_next))
            log_scale_sum += a.sum(axis=1)
            u = u_next
        return u, log_scale_sum, cache

    def log_prob(self, X) -> np.ndarray:
        """Exact log-density of each row under the flow."""
        X = self._require_ready(X)
        u, log_scale_sum, _ = self._flow_forward(X)
        with np.errstate(over="ignore"):
            sq = np.sum(u * u, axis=1)
        return -0.5 * sq - 0.5 * self._d * LOG_2PI - log_scale_sum

    def nll(self, X) -> np.ndarray:
        """Per-sample negative log-likelihood (the training loss)."""
        return -self.log_prob(X)

    per_sample_loss = nll

    def _score(self, X):
        logp = -self.nll(X)  # X already validated by caller
        if self.score_space == "likelihood":
            return -np.exp(logp)
        return -logp

    def _loss_and_param_grads(self, Xb, wb):
        self._zero_grads()
        u, log_scale_sum, cache = self._flow_forward(Xb)
        with np.errstate(over="ignore"):
            nll = 0.5 * np.sum(u * u, axis=1) + 0.5 * self._d * LOG_2PI + log_scale_sum
        loss = float(np.mean(wb * nll))
        scale = (wb / wb.shape[0])[:, None]
        grad_u = scale * u
        for block, (e, u_out) in zip(reversed(self._blocks), reversed(cache)):
            grad_mu = -grad_u * e
            grad_a = -grad_u * u_out + scale
            grad_in_net = network_backward(block, np.hstack([grad_mu, grad_a]))
            grad_u = grad_u * e + grad_in_net
        return loss, self._collect_loss_gradients()

    def _state_arrays(self):
        arrays = {}
        for b, block in enumerate(self._blocks):
            for i, layer in enumerate(block):
                arrays[f"block_{b}_layer_{i}_weight"] = layer.weight
                arrays[f"block_{b}_layer_{i}_bias"] = layer.bias
        return arrays

    def _state_scalars(self):
        return {"n_blocks": len(self._blocks), "d": self._d}

    def _restore(self, arrays, scalars):
        self._d = int(scalars["d"])
        n_blocks = int(scalars["n_blocks"])
        hidden = arrays["block_0_layer_0_weight"].shape[0]
        self._blocks = []
        for b in range(n_blocks):
            mask_in, mask_out, _ = autoregressive_masks(self._d, hidden, b % 2 == 1)
            first = Dense(
                arrays[f"block_{b}_layer_0_weight"].copy(),
                bias=arrays[f"block_{b}_layer_0_bias"].copy(),
                mask=mask_in,
                activation=LEAKY_RELU,
                slope=self.slope,
            )
            last = Dense(
                arrays[f"block_{b}_layer_1_weight"].copy(),
                bias=arrays[f"block_{b}_layer_1_bias"].copy(),
                mask=mask_out,
                activation=IDENTITY,
            )
            self._blocks.append([first, last])
