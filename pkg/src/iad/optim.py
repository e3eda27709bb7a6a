"""Adaptive-moment gradient optimizer with decoupled weight decay."""

from __future__ import annotations

import numpy as np

from .exceptions import TrainingAbortError


class Adam:
    """Standard bias-corrected adaptive-moment update.

    Weight decay is decoupled (applied directly to the parameters, not
    mixed into the gradient moments). Moment accumulators are created
    lazily from the first ``step`` call and are keyed by position, so the
    same parameter list must be passed on every step.
    """

    def __init__(self, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8, weight_decay=0.0):
        if lr < 0.0:
            raise ValueError(f"learning rate must be >= 0, got {lr}")
        if weight_decay < 0.0:
            raise ValueError(f"weight decay must be >= 0, got {weight_decay}")
        self.lr = float(lr)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.eps = float(eps)
        self.weight_decay = float(weight_decay)
        self.t = 0
        self._m: list[np.ndarray] | None = None
        self._v: list[np.ndarray] | None = None

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        """Update ``params`` in place from ``grads`` (aligned lists)."""
        if len(params) != len(grads):
            raise ValueError("params and grads must align")
        if self._m is None:
            self._m = [np.zeros_like(p) for p in params]
            self._v = [np.zeros_like(p) for p in params]
        if len(params) != len(self._m):
            raise ValueError("parameter list changed between steps")
        self.t += 1
        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t
        for i, (p, g) in enumerate(zip(params, grads)):
            if not np.all(np.isfinite(g)):
                raise TrainingAbortError(
                    f"non-finite gradient in parameter {i} at step {self.t}"
                )
            m = self._m[i]
            v = self._v[i]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            update = (m / bc1) / (np.sqrt(v / bc2) + self.eps)
            if self.weight_decay != 0.0:
                update = update + self.weight_decay * p
            p -= self.lr * update

    def state(self) -> dict:
        return {
            "t": self.t,
            "m": None if self._m is None else [m.copy() for m in self._m],
            "v": None if self._v is None else [v.copy() for v in self._v],
        }

    def restore(self, state: dict) -> None:
        self.t = int(state["t"])
        self._m = None if state["m"] is None else [m.copy() for m in state["m"]]
        self._v = None if state["v"] is None else [v.copy() for v in state["v"]]
