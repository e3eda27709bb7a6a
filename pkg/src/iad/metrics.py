"""Evaluation metrics and score/weight distribution analyses.

Labels enter the pipeline only here: training code never sees them, and
everything in this module is a pure function of its arguments.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import UndefinedMetricError
from .validation import check_binary_labels, check_scores


def average_ranks(values) -> np.ndarray:
    """1-based ranks with ties assigned the mean of their covered positions."""
    v = np.asarray(values, dtype=np.float64).ravel()
    n = v.size
    order = np.argsort(v, kind="stable")
    sorted_v = v[order]
    ranks = np.empty(n, dtype=np.float64)
    i = 0
    while i < n:
        j = i
        while j + 1 < n and sorted_v[j + 1] == sorted_v[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def auc(scores, labels) -> float:
    """Probability that a random anomaly outscores a random normal (ties half).

    Rank-based Mann-Whitney formulation; exact, O(n log n).
    """
    s = check_scores(scores)
    y = check_binary_labels(labels, s.size)
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError("AUC needs at least one sample of each class")
    ranks = average_ranks(s)
    pos_rank_sum = float(ranks[y == 1].sum())
    return (pos_rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def pgr(auc_base: float, auc_selected: float, auc_best: float) -> float:
    """Normalised gain in percent: base maps to 0, best-round to 100."""
    denom = auc_best - auc_base
    if denom == 0.0:
        raise UndefinedMetricError(
            "performance gain ratio is undefined when best equals base"
        )
    return 100.0 * (auc_selected - auc_base) / denom


def weight_trajectory(history, labels) -> dict[str, np.ndarray]:
    """Per-round mean/median of the training weights, split by true class.

    ``history`` is a sequence of round records carrying ``t`` and
    ``weights_used``; labels are the evaluation-only ground truth.
    """
    y = check_binary_labels(labels)
    normal = y == 0
    abnormal = y == 1
    rounds, mean_n, med_n, mean_a, med_a = [], [], [], [], []
    for rec in history:
        w = np.asarray(rec.weights_used, dtype=np.float64)
        if w.size != y.size:
            raise ValueError("weight vector length does not match labels")
        rounds.append(rec.t)
        mean_n.append(float(w[normal].mean()) if normal.any() else np.nan)
        med_n.append(float(np.median(w[normal])) if normal.any() else np.nan)
        mean_a.append(float(w[abnormal].mean()) if abnormal.any() else np.nan)
        med_a.append(float(np.median(w[abnormal])) if abnormal.any() else np.nan)
    return {
        "round": np.asarray(rounds),
        "mean_normal": np.asarray(mean_n),
        "median_normal": np.asarray(med_n),
        "mean_anomaly": np.asarray(mean_a),
        "median_anomaly": np.asarray(med_a),
    }


@dataclass(frozen=True)
class KdeResult:
    """Gaussian-kernel density estimate, or a symbolic spike when the
    sample has zero spread (bandwidth would be zero)."""

    grid: np.ndarray
    density: np.ndarray | None
    bandwidth: float
    spike_at: float | None = None

    @property
    def is_spike(self) -> bool:
        return self.spike_at is not None


def silverman_bandwidth(values: np.ndarray) -> float:
    """0.9 * min(std, IQR/1.34) * n^(-1/5); falls back to std when IQR is 0."""
    n = values.size
    std = float(values.std(ddof=1)) if n > 1 else 0.0
    q75, q25 = np.percentile(values, [75.0, 25.0])
    iqr = float(q75 - q25)
    scale = min(std, iqr / 1.34) if iqr > 0.0 else std
    return 0.9 * scale * n ** (-0.2)


def weight_kde(weights, grid=None) -> KdeResult:
    """Estimate the weight distribution on a grid over [0, 1]."""
    w = check_scores(weights, name="weights")
    if w.size < 2:
        raise ValueError("need at least two weights for a density estimate")
    if grid is None:
        grid = np.linspace(0.0, 1.0, 256)
    grid = np.asarray(grid, dtype=np.float64)
    bw = silverman_bandwidth(w)
    if bw == 0.0:
        return KdeResult(grid=grid, density=None, bandwidth=0.0, spike_at=float(w[0]))
    z = (grid[:, None] - w[None, :]) / bw
    density = np.exp(-0.5 * z * z).sum(axis=1) / (w.size * bw * np.sqrt(2.0 * np.pi))
    return KdeResult(grid=grid, density=density, bandwidth=bw)


def count_modes(density: np.ndarray) -> int:
    """Strict local maxima of a sampled curve (plateaus collapse to one)."""
    d = np.asarray(density, dtype=np.float64)
    sign = np.sign(np.diff(d))
    sign = sign[sign != 0.0]
    if sign.size == 0:
        return 0
    modes = int(np.sum((sign[:-1] > 0) & (sign[1:] < 0)))
    if sign[0] < 0:
        modes += 1  # falling from the left edge
    if sign[-1] > 0:
        modes += 1  # rising into the right edge
    return modes


def eval_report(history, selected_round: int, criterion: str, labels=None) -> dict:
    """Assemble the JSON-ready evaluation report for one finished run.

    Always includes the per-round crossing counts and score summaries;
    AUC-based fields, the weight trajectory and the per-round weight-KDE
    summaries are added when evaluation labels are supplied.
    """
    report: dict = {
        "selected_round": int(selected_round),
        "criterion": criterion,
        "rounds_completed": len(history),
        "h_per_round": [None if rec.h is None else int(rec.h) for rec in history],
        "score_stats_per_round": [
            {
                "min": float(np.min(rec.scores)),
                "median": float(np.median(rec.scores)),
                "max": float(np.max(rec.scores)),
            }
            for rec in history
        ],
        "degenerate_rounds": [
            int(rec.t) for rec in history if getattr(rec, "degenerate_scores", False)
        ],
    }
    if labels is None:
        report["auc_per_round"] = None
        return report
    y = check_binary_labels(labels)
    auc_series = [float(auc(rec.scores, y)) for rec in history]
    best_idx = int(np.argmax(auc_series))
    report["auc_per_round"] = auc_series
    report["auc_base"] = auc_series[0]
    report["auc_selected"] = auc_series[selected_round]
    report["auc_best"] = auc_series[best_idx]
    report["best_round"] = best_idx
    try:
        report["pgr"] = pgr(auc_series[0], auc_series[selected_round],
                            auc_series[best_idx])
    except UndefinedMetricError:
        report["pgr"] = None
    traj = weight_trajectory(history, y)
    report["weight_trajectory"] = {
        k: [None if np.isnan(v) else float(v) for v in arr]
        for k, arr in traj.items()
        if k != "round"
    }
    kde_summaries = []
    for rec in history:
        res = weight_kde(rec.weights_used)
        kde_summaries.append(
            {
                "bandwidth": float(res.bandwidth),
                "modes": None if res.is_spike else count_modes(res.density),
                "spike_at": res.spike_at,
            }
        )
    report["weight_kde_per_round"] = kde_summaries
    return report


def otsu_separability(scores) -> float:
    """Best between-class variance over 256-bin thresholds, as a fraction
    of total variance of the min-max normalised scores. 0 when the scores
    have no spread."""
    s = check_scores(scores)
    if s.size < 2:
        raise ValueError("need at least two scores")
    lo, hi = float(s.min()), float(s.max())
    if hi == lo:
        return 0.0
    z = (s - lo) / (hi - lo)
    counts, _ = np.histogram(z, bins=256, range=(0.0, 1.0))
    p = counts.astype(np.float64) / s.size
    centers = (np.arange(256) + 0.5) / 256.0
    mu_total = float((p * centers).sum())
    var_total = float((p * (centers - mu_total) ** 2).sum())
    if var_total == 0.0:
        return 0.0
    w0 = np.cumsum(p)[:-1]
    mu0 = np.cumsum(p * centers)[:-1]
    valid = (w0 > 0.0) & (w0 < 1.0)
    between = np.zeros_like(w0)
    between[valid] = (mu_total * w0[valid] - mu0[valid]) ** 2 / (
        w0[valid] * (1.0 - w0[valid])
    )
    return float(between.max() / var_total)
