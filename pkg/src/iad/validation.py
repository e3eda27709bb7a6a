"""Input validation helpers.

Small check-and-coerce utilities in the spirit of sklearn's ``check_array``,
kept local so the numeric core stays numpy-only. All numeric code in the
package runs in float64.
"""

from __future__ import annotations

import numpy as np


def check_matrix(X, name: str = "X") -> np.ndarray:
    """Coerce to a 2-D float64 array with finite entries."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError(f"{name} contains non-finite entries")
    return X


def check_scores(scores, name: str = "scores") -> np.ndarray:
    scores = np.asarray(scores, dtype=np.float64).ravel()
    if scores.size == 0:
        raise ValueError(f"{name} is empty")
    if not np.all(np.isfinite(scores)):
        raise ValueError(f"{name} contains non-finite entries")
    return scores


def check_weights(w, n: int, name: str = "sample_weight") -> np.ndarray:
    """Validate a per-sample weight vector: length n, entries in [0, 1]."""
    w = np.asarray(w, dtype=np.float64).ravel()
    if w.shape != (n,):
        raise ValueError(f"{name} must have length {n}, got {w.shape}")
    if not np.all(np.isfinite(w)):
        raise ValueError(f"{name} contains non-finite entries")
    if w.min() < 0.0 or w.max() > 1.0:
        raise ValueError(f"{name} entries must lie in [0, 1]")
    return w


def check_binary_labels(y, n: int | None = None) -> np.ndarray:
    """Validate 0/1 labels (0 = normal, 1 = anomaly)."""
    y = np.asarray(y).ravel()
    if n is not None and y.shape != (n,):
        raise ValueError(f"labels must have length {n}, got {y.shape}")
    vals = np.unique(y)
    if not np.all(np.isin(vals, (0, 1))):
        raise ValueError(f"labels must be binary 0/1, found values {vals}")
    return y.astype(np.int64)
