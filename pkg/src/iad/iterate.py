"""The outer training loop: train, score, reweight, repeat, select.

Round 0 trains the base detector with unit weights. Every later round
re-trains with the importance weights derived from the previous round's
anomaly scores, records how many samples crossed the rank pivot since the
last round, and finally the round with the lowest crossing count is
selected (other criteria are available for comparison).

Training code in this module sees only the raw feature matrix; labels
stay in :mod:`iad.metrics`.

Random-stream allocation (all derived from the run seed):
  stream 1            detector initialisation and epoch shuffling
  stream 50           ensemble sub-dataset draws
  stream 100 + t      per-round re-initialisation (warm_start=False)
  stream 1000 + 100 j (+ t)  ensemble member j (and its per-round re-inits)
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConfigurationError, TrainingAbortError
from .reweight import score_stats, sigmoid_params, update_weights
from .rng import RngStream
from .termination import Criterion, rank_scores, select_round, termination_value
from .validation import check_matrix

STREAM_DETECTOR = 1
STREAM_ENSEMBLE_SPLIT = 50
STREAM_ROUND_REINIT = 100
STREAM_MEMBER_BASE = 1000
_MEMBER_STRIDE = 100


@dataclass
class IadConfig:
    """Outer-loop settings.

    ``rounds`` is the number of reweighted rounds T; the loop always runs
    rounds 0..T, with round 0 the plain base model. ``inv_tau`` is the
    reciprocal temperature of the weight update (higher = sharper).
    """

    rounds: int = 15
    epochs: int = 10
    inv_tau: float = 4.0
    partition: float = 0.5
    warm_start: bool = True
    fresh_optimizer: bool = False
    criterion: str = "rank-cross"

    @property
    def tau(self) -> float:
        return 1.0 / self.inv_tau

    def validate(self) -> "IadConfig":
        if self.rounds < 0:
            raise ConfigurationError("rounds must be >= 0")
        if self.epochs < 1:
            raise ConfigurationError("epochs must be >= 1")
        if self.inv_tau <= 0.0:
            raise ConfigurationError("inv_tau must be > 0")
        if not 0.0 < self.partition < 1.0:
            raise ConfigurationError("partition must be in (0, 1)")
        try:
            Criterion.parse(self.criterion)
        except ValueError as exc:
            raise ConfigurationError(str(exc)) from None
        return self


@dataclass
class RoundRecord:
    """Snapshot of one completed round."""

    t: int
    scores: np.ndarray
    weights_used: np.ndarray
    ranks: np.ndarray
    h: int | None
    state: dict
    mean_loss: float
    degenerate_scores: bool = False


@dataclass
class IadResult:
    selected_round: int
    history: list[RoundRecord] = field(repr=False)
    criterion: str = "rank-cross"

    @property
    def selected(self) -> RoundRecord:
        return self.history[self.selected_round]

    @property
    def base(self) -> RoundRecord:
        return self.history[0]


def run_iad(X, detector, config: IadConfig | None = None, seed: int = 0) -> IadResult:
    """Run the full iterative loop and leave ``detector`` at the selected round.

    Returns the selected round index plus the complete per-round history.
    If training diverges mid-round the history is truncated at the last
    completed round and selection runs over what completed; divergence in
    round 0 propagates.
    """
    config = (config or IadConfig()).validate()
    X = check_matrix(X)
    n = X.shape[0]
    detector.reset(RngStream(seed, STREAM_DETECTOR))
    weights = np.ones(n)
    history: list[RoundRecord] = []
    prev_ranks = None
    try:
        for t in range(config.rounds + 1):
            if t > 0:
                if not config.warm_start:
                    detector.reset(RngStream(seed, STREAM_ROUND_REINIT + t))
                elif config.fresh_optimizer:
                    # parameters carry over; the optimizer restarts because
                    # each round minimises a differently-weighted objective
                    detector.reset_optimizer()
            losses = [detector.train_epoch(X, weights) for _ in range(config.epochs)]
            scores = detector.score_all(X)
            ranks = rank_scores(scores)
            h = None
            if t >= 1:
                h = termination_value(ranks, prev_ranks, n, config.partition)
            degenerate = sigmoid_params(score_stats(scores), config.tau).degenerate
            history.append(
                RoundRecord(
                    t=t,
                    scores=scores,
                    weights_used=weights.copy(),
                    ranks=ranks,
                    h=h,
                    state=detector.get_state(),
                    mean_loss=float(np.mean(losses)),
                    degenerate_scores=degenerate,
                )
            )
            prev_ranks = ranks
            with warnings.catch_warnings():
                if degenerate:
                    warnings.simplefilter("ignore", RuntimeWarning)
                weights = update_weights(scores, config.tau)
    except TrainingAbortError:
        if not history:
            raise
        warnings.warn(
            f"training aborted after round {history[-1].t}; selecting over "
            f"{len(history)} completed rounds",
            RuntimeWarning,
            stacklevel=2,
        )
    selected = select_round(history, config.criterion)
    detector.set_state(history[selected].state)
    return IadResult(selected_round=selected, history=history,
                     criterion=config.criterion)


class EnsembleScorer:
    """Median-scaled average over trained ensemble members.

    Each member's scores are divided by the scale recorded from its own
    training-set scores (normally the median), then averaged; new data is
    scored the same way.
    """

    def __init__(self, members, scales):
        self.members = members
        self.scales = np.asarray(scales, dtype=np.float64)

    def score_all(self, X) -> np.ndarray:
        per_member = np.stack(
            [m.score_all(X) / s for m, s in zip(self.members, self.scales)]
        )
        return per_member.mean(axis=0)

    decision_function = score_all


@dataclass
class EnsembleResult:
    selected_round: int
    history: list[RoundRecord] = field(repr=False)
    scorer: EnsembleScorer | None = None
    member_indices: list[np.ndarray] | None = None
    criterion: str = "rank-cross"

    @property
    def selected(self) -> RoundRecord:
        return self.history[self.selected_round]


def _member_scale(scores: np.ndarray, member: int) -> float:
    scale = float(np.median(scores))
    if scale == 0.0:
        warnings.warn(
            f"ensemble member {member} has zero median score; "
            "falling back to mean scaling",
            RuntimeWarning,
            stacklevel=3,
        )
        scale = float(np.mean(scores))
    if scale == 0.0:
        warnings.warn(
            f"ensemble member {member} collapsed to all-zero scores",
            RuntimeWarning,
            stacklevel=3,
        )
        scale = 1.0
    elif scale < 0.0:
        warnings.warn(
            f"ensemble member {member} has negative median score; median "
            "scaling assumes nonnegative scores, using scale 1",
            RuntimeWarning,
            stacklevel=3,
        )
        scale = 1.0
    return scale


def run_ensemble_iad(
    X,
    detector_factory,
    n_members: int = 5,
    subsample: float = 0.8,
    config: IadConfig | None = None,
    seed: int = 0,
    member_streams: list[RngStream] | None = None,
) -> EnsembleResult:
    """Iterative loop over an ensemble of independently sub-sampled members.

    Each member owns a fixed random sub-dataset (``subsample`` fraction,
    drawn without replacement). Per round, members train on their
    sub-dataset under the current weights restricted to it; their
    full-dataset scores are median-scaled, averaged, and the aggregate
    drives the weight update, the crossing count and round selection.
    """
    config = (config or IadConfig()).validate()
    if n_members < 2:
        raise ConfigurationError("ensemble needs at least 2 members")
    if not 0.0 < subsample <= 1.0:
        raise ConfigurationError("subsample fraction must be in (0, 1]")
    X = check_matrix(X)
    n = X.shape[0]
    split_rng = RngStream(seed, STREAM_ENSEMBLE_SPLIT).generator()
    size = max(1, int(round(subsample * n)))
    member_idx = [
        np.sort(split_rng.choice(n, size=size, replace=False))
        for _ in range(n_members)
    ]
    if member_streams is None:
        member_streams = [
            RngStream(seed, STREAM_MEMBER_BASE + _MEMBER_STRIDE * j)
            for j in range(n_members)
        ]
    members = []
    for j in range(n_members):
        det = detector_factory()
        det.reset(member_streams[j])
        members.append(det)

    weights = np.ones(n)
    history: list[RoundRecord] = []
    prev_ranks = None
    try:
        for t in range(config.rounds + 1):
            if t > 0:
                for j, det in enumerate(members):
                    if not config.warm_start:
                        det.reset(RngStream(member_streams[j].seed,
                                            member_streams[j].stream + t))
                    elif config.fresh_optimizer:
                        det.reset_optimizer()
            round_losses = []
            member_scores = np.empty((n_members, n))
            scales = np.empty(n_members)
            for j, det in enumerate(members):
                idx = member_idx[j]
                for _ in range(config.epochs):
                    round_losses.append(det.train_epoch(X[idx], weights[idx]))
                member_scores[j] = det.score_all(X)
                scales[j] = _member_scale(member_scores[j], j)
            scores = (member_scores / scales[:, None]).mean(axis=0)
            ranks = rank_scores(scores)
            h = None
            if t >= 1:
                h = termination_value(ranks, prev_ranks, n, config.partition)
            degenerate = sigmoid_params(score_stats(scores), config.tau).degenerate
            history.append(
                RoundRecord(
                    t=t,
                    scores=scores,
                    weights_used=weights.copy(),
                    ranks=ranks,
                    h=h,
                    state={
                        "members": [det.get_state() for det in members],
                        "scales": scales.copy(),
                    },
                    mean_loss=float(np.mean(round_losses)),
                    degenerate_scores=degenerate,
                )
            )
            prev_ranks = ranks
            with warnings.catch_warnings():
                if degenerate:
                    warnings.simplefilter("ignore", RuntimeWarning)
                weights = update_weights(scores, config.tau)
    except TrainingAbortError:
        if not history:
            raise
        warnings.warn(
            f"ensemble training aborted after round {history[-1].t}",
            RuntimeWarning,
            stacklevel=2,
        )
    selected = select_round(history, config.criterion)
    chosen = history[selected].state
    for det, state in zip(members, chosen["members"]):
        det.set_state(state)
    scorer = EnsembleScorer(members, chosen["scales"])
    return EnsembleResult(
        selected_round=selected,
        history=history,
        scorer=scorer,
        member_indices=member_idx,
        criterion=config.criterion,
    )
