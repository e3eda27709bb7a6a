"""Finite-difference verification of analytic gradients.

Intended for small models (up to ~1e4 parameters); every parameter entry
is perturbed twice, so cost is 2 * n_params loss evaluations.
"""

from __future__ import annotations

import numpy as np


def max_relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-8)
    return float(np.max(np.abs(analytic - numeric) / denom))


def grad_check(detector, X, sample_weight=None, eps: float = 1e-5) -> float:
    """Compare a detector's analytic loss gradients against central differences.

    The detector must expose ``parameters()``, ``weighted_loss(X, w)`` and
    ``loss_gradients(X, w)``. Returns the max over all parameter entries of
    ``|analytic - numeric| / max(|analytic|, |numeric|, 1e-8)``.
    """
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    w = np.ones(n) if sample_weight is None else np.asarray(sample_weight, np.float64)
    params = detector.parameters()
    analytic = [g.copy() for g in detector.loss_gradients(X, w)]
    worst = 0.0
    for p, g in zip(params, analytic):
        flat_p = p.reshape(-1)
        flat_g = g.reshape(-1)
        for k in range(flat_p.size):
            orig = flat_p[k]
            flat_p[k] = orig + eps
            lo_hi = detector.weighted_loss(X, w)
            flat_p[k] = orig - eps
            lo_lo = detector.weighted_loss(X, w)
            flat_p[k] = orig
            numeric = (lo_hi - lo_lo) / (2.0 * eps)
            denom = max(abs(flat_g[k]), abs(numeric), 1e-8)
            worst = max(worst, abs(flat_g[k] - numeric) / denom)
    return worst
