"""Round-quality criteria for the iterative loop.

The primary criterion watches how sample score *ranks* move across a
fixed percentile pivot between consecutive rounds: local reorderings on
the same side of the pivot are ignored, and only samples whose rank
crosses the pivot are counted. Low counts indicate the detector's notion
of which half of the data looks normal has stabilised.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .validation import check_scores

RANK_CROSS = "rank-cross"
LAST_ROUND = "last"
OTSU = "otsu"

_FIXED_RE = re.compile(r"^fixed-(\d+)$")


def rank_scores(scores) -> np.ndarray:
    """Ranks 1..n in ascending score order; ties broken by sample index."""
    s = check_scores(scores)
    order = np.argsort(s, kind="stable")
    ranks = np.empty(s.size, dtype=np.int64)
    ranks[order] = np.arange(1, s.size + 1)
    return ranks


def partition_pivot(n: int, p: float) -> int:
    """ceil(p * n), guarded against float fuzz when p * n is integral."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"partition fraction must be in (0, 1), got {p}")
    t = p * n
    nearest = round(t)
    if abs(t - nearest) < 1e-9:
        return int(nearest)
    return int(math.ceil(t))


def termination_value(ranks_now, ranks_prev, n: int, p: float = 0.5) -> int:
    """Count samples whose rank crossed the pivot between two rounds.

    A sample sitting exactly at the pivot rank in either round never
    counts (both comparisons are strict).
    """
    ranks_now = _check_permutation(ranks_now, n, "ranks_now")
    ranks_prev = _check_permutation(ranks_prev, n, "ranks_prev")
    pivot = partition_pivot(n, p)
    below_now = ranks_now < pivot
    above_now = ranks_now > pivot
    below_prev = ranks_prev < pivot
    above_prev = ranks_prev > pivot
    return int(np.sum(below_now & above_prev) + np.sum(above_now & below_prev))


def _check_permutation(ranks, n: int, name: str) -> np.ndarray:
    r = np.asarray(ranks, dtype=np.int64).ravel()
    if r.shape != (n,):
        raise ValueError(f"{name} must have length {n}, got {r.shape}")
    if not np.array_equal(np.sort(r), np.arange(1, n + 1)):
        raise ValueError(f"{name} is not a permutation of 1..{n}")
    return r


@dataclass(frozen=True)
class Criterion:
    """Round-selection rule, parsed from its CLI name.

    Names: ``rank-cross`` (lowest crossing count, earliest tie),
    ``fixed-K`` (round K, clamped to the last round), ``last``, ``otsu``
    (round whose score distribution is most separable).
    """

    kind: str
    fixed_round: int | None = None

    @classmethod
    def parse(cls, name: str) -> "Criterion":
        if name in (RANK_CROSS, LAST_ROUND, OTSU):
            return cls(kind=name)
        m = _FIXED_RE.match(name)
        if m:
            k = int(m.group(1))
            if k < 1:
                raise ValueError("fixed-K criterion needs K >= 1")
            return cls(kind="fixed", fixed_round=k)
        raise ValueError(
            f"unknown criterion {name!r}; expected rank-cross, fixed-K, last or otsu"
        )

    @property
    def name(self) -> str:
        if self.kind == "fixed":
            return f"fixed-{self.fixed_round}"
        return self.kind


def select_round(history, criterion: Criterion | str) -> int:
    """Pick a round index from a completed run history.

    Selection is restricted to rounds >= 1 (round 0 is the plain base
    model); a history holding only round 0 selects it.
    """
    if isinstance(criterion, str):
        criterion = Criterion.parse(criterion)
    if not history:
        raise ValueError("history is empty")
    rounds = [rec.t for rec in history]
    if rounds == [0]:
        return 0
    candidates = [rec for rec in history if rec.t >= 1]
    if not candidates:
        raise ValueError("history has no selectable round (t >= 1)")
    if criterion.kind == RANK_CROSS:
        best = min(candidates, key=lambda rec: (rec.h, rec.t))
        return best.t
    if criterion.kind == "fixed":
        return min(criterion.fixed_round, candidates[-1].t)
    if criterion.kind == LAST_ROUND:
        return candidates[-1].t
    if criterion.kind == OTSU:
        from .metrics import otsu_separability

        best = max(candidates, key=lambda rec: (otsu_separability(rec.scores), -rec.t))
        return best.t
    raise ValueError(f"unhandled criterion kind {criterion.kind!r}")
