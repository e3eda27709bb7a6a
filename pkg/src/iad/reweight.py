"""Per-sample importance weights from anomaly scores.

Scores are squashed through a sigmoid centred on the score median, with a
slope set from the smaller of the two half-ranges (median-to-min,
median-to-max) scaled by a temperature. A sample scoring at the median
gets weight 0.5; the extreme scores are pushed towards weight 1 (most
normal-looking) and 0 (most anomalous-looking).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .validation import check_scores


@dataclass(frozen=True)
class ScoreStats:
    """Min / median / max summary of a score vector."""

    s_min: float
    s_med: float
    s_max: float

    def __post_init__(self):
        if not self.s_min <= self.s_med <= self.s_max:
            raise ValueError("score stats must satisfy min <= median <= max")


@dataclass(frozen=True)
class SigmoidParams:
    """Resolved sigmoid slope/centre, plus a degeneracy flag.

    ``degenerate`` is set when the score distribution left no usable
    half-range (all scores equal), in which case every weight is 0.5.
    """

    alpha: float
    beta: float
    degenerate: bool = False


def score_stats(scores) -> ScoreStats:
    s = check_scores(scores)
    return ScoreStats(float(s.min()), float(np.median(s)), float(s.max()))


def sigmoid_params(stats: ScoreStats, tau: float) -> SigmoidParams:
    """Slope 1/(gap * tau) and centre at the median.

    ``gap`` is the smaller of the two half-ranges. A zero half-range
    (median coincides with min or max) falls back to the other one; when
    both collapse the result is flagged degenerate.
    """
    if tau <= 0.0:
        raise ValueError(f"tau must be > 0, got {tau}")
    low_gap = stats.s_med - stats.s_min
    high_gap = stats.s_max - stats.s_med
    gap = min(low_gap, high_gap)
    if gap == 0.0:
        gap = max(low_gap, high_gap)
    if gap == 0.0:
        return SigmoidParams(alpha=0.0, beta=stats.s_med, degenerate=True)
    return SigmoidParams(alpha=1.0 / (gap * tau), beta=stats.s_med)


def update_weights(scores, tau: float) -> np.ndarray:
    """Map a score vector to importance weights w_i = sigmoid(-alpha (s_i - beta)).

    Strictly decreasing in the score; 0.5 at the median. All-equal scores
    produce a uniform 0.5 vector with a warning.
    """
    s = check_scores(scores)
    if s.size < 2:
        raise ValueError("need at least two scores to derive weights")
    params = sigmoid_params(score_stats(s), tau)
    if params.degenerate:
        warnings.warn(
            "all anomaly scores are identical; importance weights set to 0.5",
            RuntimeWarning,
            stacklevel=2,
        )
        return np.full(s.size, 0.5)
    z = params.alpha * (s - params.beta)
    return stable_logistic(-z)


def stable_logistic(z: np.ndarray) -> np.ndarray:
    """1 / (1 + exp(-z)) without overflow warnings for large |z|."""
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0.0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out
