"""Ranking accuracy metrics: per-cascade AP, MAP, and scaled MAP.

The diffusion source is given to the predictor, so it is excluded from
both the ranking and the evaluated truth set.  A truth node at rank k of
the prediction contributes |top-k of prediction per truth set| / k; truth
nodes missing from the ranking contribute 0.  Scaled MAP multiplies MAP
by network size over cascade length, which removes the task-size effects
(more candidates hurt, larger targets help) from the score.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ValidationError
from .simulate import Cascade


@dataclass(frozen=True)
class PredictedRanking:
    """Ordered candidate list for one source, best candidate first."""

    source: int
    ranking: tuple

    def __post_init__(self):
        if len(set(self.ranking)) != len(self.ranking):
            raise ValidationError("ranking contains duplicate candidates")
        if self.source in self.ranking:
            raise ValidationError("ranking must not contain the source")


def average_precision(truth: Cascade, pred: PredictedRanking) -> float:
    """Eq.-style average precision of one ranking against one truth cascade."""
    evaluated = set(truth.nodes[1:])
    if not evaluated:
        raise ValueError("truth cascade has no nodes to evaluate beyond the source")
    acc = 0.0
    hits = 0
    for rank, candidate in enumerate(pred.ranking, start=1):
        if candidate in evaluated:
            hits += 1
            acc += hits / rank
    return acc / len(evaluated)


def mean_average_precision(truths, preds, k: int | None = None) -> float:
    """Mean AP over aligned (truth, prediction) pairs.

    When k is given each ranking is truncated to its top-k before scoring
    (truth nodes pushed out of the top-k then score 0).
    """
    if len(truths) != len(preds):
        raise ValidationError(f"{len(truths)} truths vs {len(preds)} predictions")
    if len(truths) == 0:
        raise ValidationError("need at least one (truth, prediction) pair")
    if k is not None and k < 1:
        raise ValidationError("k must be positive")
    total = 0.0
    for truth, pred in zip(truths, preds):
        if truth.source != pred.source:
            raise ValidationError(
                f"source mismatch: truth {truth.source} vs prediction {pred.source}"
            )
        if k is not None:
            pred = PredictedRanking(pred.source, pred.ranking[:k])
        total += average_precision(truth, pred)
    return total / len(truths)


def smap(map_value: float, network_size: int, target_length: int) -> float:
    """Scaled MAP: map_value * network_size / target_length."""
    if target_length < 1 or network_size < target_length:
        raise ValueError(
            f"need network_size >= target_length >= 1, got {network_size}, {target_length}"
        )
    return map_value * network_size / target_length


@dataclass(frozen=True)
class EvalResult:
    """MAP/SMAP summary of one evaluation run."""

    per_cascade_ap: tuple
    map_value: float
    smap_value: float
    network_size: int
    target_length: int


def evaluate_rankings(truths, preds, network_size: int, target_length: int,
                      k: int | None = None) -> EvalResult:
    """Score aligned rankings and bundle AP list, MAP and SMAP."""
    aps = []
    for truth, pred in zip(truths, preds):
        if truth.source != pred.source:
            raise ValidationError(
                f"source mismatch: truth {truth.source} vs prediction {pred.source}"
            )
        scored = pred if k is None else PredictedRanking(pred.source, pred.ranking[:k])
        aps.append(average_precision(truth, scored))
    if not aps:
        raise ValidationError("need at least one (truth, prediction) pair")
    map_value = sum(aps) / len(aps)
    return EvalResult(
        per_cascade_ap=tuple(aps),
        map_value=map_value,
        smap_value=smap(map_value, network_size, target_length),
        network_size=network_size,
        target_length=target_length,
    )
