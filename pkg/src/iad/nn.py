"""Minimal deterministic feed-forward substrate.

Dense layers (optionally connection-masked and bias-free) with explicit
forward caches and hand-written backward passes. This is deliberately not
a general autodiff engine: the detectors in this package only need
gradients of a handful of losses through stacks of these layers, and a
fixed, cache-based backward keeps trajectories bit-reproducible.

Everything is float64. Shapes follow the convention: inputs are
``(batch, in_dim)``, weights are ``(out_dim, in_dim)``.
"""

from __future__ import annotations

import numpy as np

IDENTITY = "identity"
LEAKY_RELU = "leaky_relu"
TANH = "tanh"

_ACTIVATIONS = (IDENTITY, LEAKY_RELU, TANH)


def glorot_uniform(rng: np.random.Generator, out_dim: int, in_dim: int) -> np.ndarray:
    """Fan-based uniform init, U(-limit, limit) with limit = sqrt(6/(fan_in+fan_out))."""
    limit = np.sqrt(6.0 / (in_dim + out_dim))
    return rng.uniform(-limit, limit, size=(out_dim, in_dim)).astype(np.float64)


class Dense:
    """Fully connected layer ``act(x @ (W * mask).T + b)``.

    The mask, when present, is applied at every forward and backward pass,
    so masked-out connections carry no signal and receive exactly zero
    gradient. ``bias=None`` builds a bias-free layer.
    """

    def __init__(self, weight, bias=None, mask=None, activation=IDENTITY, slope=0.01):
        self.weight = np.asarray(weight, dtype=np.float64)
        if self.weight.ndim != 2:
            raise ValueError(f"weight must be 2-D, got shape {self.weight.shape}")
        self.bias = None if bias is None else np.asarray(bias, dtype=np.float64).ravel()
        if self.bias is not None and self.bias.shape != (self.weight.shape[0],):
            raise ValueError("bias shape does not match weight rows")
        self.mask = None if mask is None else np.asarray(mask, dtype=np.float64)
        if self.mask is not None and self.mask.shape != self.weight.shape:
            raise ValueError("mask shape does not match weight shape")
        if activation not in _ACTIVATIONS:
            raise ValueError(f"unknown activation {activation!r}")
        self.activation = activation
        self.slope = float(slope)
        self.grad_weight = np.zeros_like(self.weight)
        self.grad_bias = None if self.bias is None else np.zeros_like(self.bias)
        self._x = None
        self._pre = None

    @property
    def in_dim(self) -> int:
        return self.weight.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weight.shape[0]

    def effective_weight(self) -> np.ndarray:
        return self.weight if self.mask is None else self.weight * self.mask

    def forward(self, x: np.ndarray) -> np.ndarray:
        if x.ndim != 2 or x.shape[1] != self.in_dim:
            raise ValueError(
                f"layer expects (batch, {self.in_dim}) input, got {x.shape}"
            )
        self._x = x
        pre = x @ self.effective_weight().T
        if self.bias is not None:
            pre = pre + self.bias
        self._pre = pre
        if self.activation == IDENTITY:
            return pre
        if self.activation == LEAKY_RELU:
            return np.where(pre > 0.0, pre, self.slope * pre)
        return np.tanh(pre)

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        """Accumulate parameter gradients; return the gradient at the input."""
        if self._x is None:
            raise RuntimeError("backward called without a cached forward pass")
        if self.activation == IDENTITY:
            grad_pre = grad_out
        elif self.activation == LEAKY_RELU:
            grad_pre = grad_out * np.where(self._pre > 0.0, 1.0, self.slope)
        else:
            t = np.tanh(self._pre)
            grad_pre = grad_out * (1.0 - t * t)
        gw = grad_pre.T @ self._x
        if self.mask is not None:
            gw *= self.mask
        self.grad_weight += gw
        if self.bias is not None:
            self.grad_bias += grad_pre.sum(axis=0)
        return grad_pre @ self.effective_weight()

    def zero_grad(self) -> None:
        self.grad_weight[...] = 0.0
        if self.grad_bias is not None:
            self.grad_bias[...] = 0.0

    def parameters(self) -> list[np.ndarray]:
        return [self.weight] if self.bias is None else [self.weight, self.bias]

    def gradients(self) -> list[np.ndarray]:
        return [self.grad_weight] if self.bias is None else [self.grad_weight, self.grad_bias]


def dense(rng, in_dim, out_dim, activation=IDENTITY, bias=True, mask=None, slope=0.01) -> Dense:
    """Build a Glorot-initialised layer from a seeded generator."""
    w = glorot_uniform(rng, out_dim, in_dim)
    b = np.zeros(out_dim, dtype=np.float64) if bias else None
    return Dense(w, bias=b, mask=mask, activation=activation, slope=slope)


def network_forward(layers: list[Dense], x: np.ndarray) -> np.ndarray:
    """Run a layer stack, caching activations for a later backward pass."""
    out = np.asarray(x, dtype=np.float64)
    for layer in layers:
        out = layer.forward(out)
    return out


def network_backward(layers: list[Dense], grad_out: np.ndarray) -> np.ndarray:
    """Backpropagate through a stack; returns the gradient at the stack input."""
    g = grad_out
    for layer in reversed(layers):
        g = layer.backward(g)
    return g


def weighted_output_grad(per_sample_grad: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Scale per-sample loss gradients for the batch loss (1/|B|) sum_i w_i l_i."""
    w = np.asarray(weights, dtype=np.float64)
    return per_sample_grad * (w / w.shape[0])[:, None]


def zero_grads(layers: list[Dense]) -> None:
    for layer in layers:
        layer.zero_grad()


def collect_parameters(layers: list[Dense]) -> list[np.ndarray]:
    params: list[np.ndarray] = []
    for layer in layers:
        params.extend(layer.parameters())
    return params


def collect_gradients(layers: list[Dense]) -> list[np.ndarray]:
    grads: list[np.ndarray] = []
    for layer in layers:
        grads.extend(layer.gradients())
    return grads
