"""Heat-kernel embedding predictors for next-recipient ranking.

Three variants share one scoring rule and differ only in which latent
spaces they allocate:

* CDK  - every node has a single position z_v; score(s, v) = -||z_s - z_v||^2.
* PAE  - separate influence a_v and susceptibility b_v per node;
         score(s, v) = -||a_s - b_v||^2.
* IAE  - influence a_v per node plus one susceptibility space per source;
         score(s, v) = -||a_s - b_v^(s)||^2.  Susceptibility spaces are
         allocated lazily for sources seen in training; an unseen source
         falls back to its deterministic seeded initialization.

Ranking by negative squared distance is order-equivalent to ranking by
the heat kernel value (4*pi*t)^(-d/2) * exp(-dist^2 / (4t)) at fixed
(t, d); the kernel itself is kept for parity and testing.

Training is sequential SGD over sampled ranking constraints.  For each
epoch and cascade (source s, members v_1..v_n in infection order), we
draw `pairs_per_cascade` events; each event picks a member v_i uniformly,
then (a) if a later member exists, a uniform later member v_j yields the
constraint score(s, v_i) >= score(s, v_j) + margin, and (b) each of
`negatives_per_pair` uniform non-members u yields score(s, v_i) >=
score(s, u) + margin.  A violated constraint triggers one hinge-loss
gradient step on the anchor and both target vectors.  The whole schedule
is a pure function of (spec, data, seed).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import TrainingError, ValidationError
from .metrics import PredictedRanking
from .simulate import CascadeSet

CDK = "CDK"
PAE = "PAE"
IAE = "IAE"
EXTERNAL = "EXTERNAL"
RANDOM = "RANDOM"
VARIANTS = (CDK, PAE, IAE, EXTERNAL, RANDOM)
TRAINABLE = (CDK, PAE, IAE)

MODEL_FORMAT_VERSION = 1


@dataclass(frozen=True)
class PredictorSpec:
    """Hyperparameters for one predictor instance."""

    variant: str
    latent_dim: int = 10
    margin: float = 1.0
    learning_rate: float = 0.01
    epochs: int = 50
    pairs_per_cascade: int | None = None  # None -> 5 * cascade length
    negatives_per_pair: int = 1
    kernel_time: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValidationError(f"unknown variant {self.variant!r}")
        if self.latent_dim < 1:
            raise ValidationError("latent_dim must be >= 1")
        if self.margin <= 0:
            raise ValidationError("margin must be positive")
        if self.learning_rate <= 0:
            raise ValidationError("learning_rate must be positive")
        if self.epochs < 0:
            raise ValidationError("epochs must be >= 0")
        if self.pairs_per_cascade is not None and self.pairs_per_cascade < 1:
            raise ValidationError("pairs_per_cascade must be positive")
        if self.negatives_per_pair < 1:
            raise ValidationError("negatives_per_pair must be >= 1")
        if self.kernel_time <= 0:
            raise ValidationError("kernel_time must be positive")


def heat_kernel(t: float, d: int, sq_dist: float) -> float:
    """Heat-diffusion kernel value (4*pi*t)^(-d/2) * exp(-sq_dist / (4t))."""
    if t <= 0:
        raise ValueError("kernel time must be positive")
    if sq_dist < 0:
        raise ValueError("squared distance must be >= 0")
    return (4.0 * math.pi * t) ** (-d / 2.0) * math.exp(-sq_dist / (4.0 * t))


def pair_ranking_gradients(anchor, earlier, later, margin: float):
    """Hinge loss and gradients for one ranking constraint.

    loss = max(0, margin - s(earlier) + s(later)) with
    s(u) = -||anchor - u||^2.  Returns (loss, g_anchor, g_earlier,
    g_later); gradients are zero when the constraint is satisfied.
    This is the reference definition of the training step; the compiled
    loop in `_sgd_cascade` applies exactly these gradients.
    """
    anchor = np.asarray(anchor, dtype=np.float64)
    earlier = np.asarray(earlier, dtype=np.float64)
    later = np.asarray(later, dtype=np.float64)
    d_i = anchor - earlier
    d_j = anchor - later
    s_i = -float(d_i @ d_i)
    s_j = -float(d_j @ d_j)
    loss = margin - s_i + s_j
    if loss <= 0.0:
        zero = np.zeros_like(anchor)
        return 0.0, zero, zero.copy(), zero.copy()
    return loss, 2.0 * (d_i - d_j), -2.0 * d_i, 2.0 * d_j


@njit(cache=True)
def _sgd_cascade(anchor, targets, src, ei, lj, neg, margin, lr):
    """Apply the sampled updates of one cascade visit, in sample order.

    anchor and targets may alias (single-space variant); src never equals
    any target index so row updates stay independent.  lj / neg entries
    of -1 mark absent constraints.
    """
    d = anchor.shape[1]
    for t in range(ei.shape[0]):
        i = ei[t]
        j = lj[t]
        if j >= 0:
            _apply_pair(anchor, targets, src, i, j, margin, lr, d)
        for r in range(neg.shape[1]):
            u = neg[t, r]
            if u >= 0:
                _apply_pair(anchor, targets, src, i, u, margin, lr, d)


@njit(cache=True, inline="always")
def _apply_pair(anchor, targets, s, i, j, margin, lr, d):
    s_i = 0.0
    s_j = 0.0
    for q in range(d):
        di = anchor[s, q] - targets[i, q]
        dj = anchor[s, q] - targets[j, q]
        s_i -= di * di
        s_j -= dj * dj
    if s_i - s_j < margin:
        for q in range(d):
            di = anchor[s, q] - targets[i, q]
            dj = anchor[s, q] - targets[j, q]
            anchor[s, q] -= lr * 2.0 * (di - dj)
            targets[i, q] += lr * 2.0 * di
            targets[j, q] -= lr * 2.0 * dj


def _init_matrix(rng, universe_size: int, dim: int) -> np.ndarray:
    return rng.standard_normal((universe_size, dim)) / math.sqrt(dim)


def _source_space_seed(seed: int, source: int):
    return np.random.SeedSequence((seed, 1, source))


class EmbeddingModel:
    """Trained (or freshly initialized) embedding predictor.

    Immutable after training; prediction is safe to call concurrently.
    """

    def __init__(self, variant: str, universe_size: int, latent_dim: int,
                 kernel_time: float, seed: int, params: dict,
                 source_susceptibility: dict | None = None):
        self.variant = variant
        self.universe_size = universe_size
        self.latent_dim = latent_dim
        self.kernel_time = kernel_time
        self.seed = seed
        self.params = params
        self.source_susceptibility = source_susceptibility if source_susceptibility is not None else {}

    @classmethod
    def initialize(cls, spec: PredictorSpec, universe_size: int) -> "EmbeddingModel":
        """Seeded standard-normal init scaled by 1/sqrt(latent_dim)."""
        if spec.variant not in TRAINABLE:
            raise ValidationError(f"variant {spec.variant} has no embedding parameters")
        rng = np.random.default_rng(np.random.SeedSequence((spec.seed, 0)))
        d = spec.latent_dim
        if spec.variant == CDK:
            params = {"positions": _init_matrix(rng, universe_size, d)}
        elif spec.variant == PAE:
            params = {
                "influence": _init_matrix(rng, universe_size, d),
                "susceptibility": _init_matrix(rng, universe_size, d),
            }
        else:  # IAE: susceptibility spaces are created lazily, per source
            params = {"influence": _init_matrix(rng, universe_size, d)}
        return cls(spec.variant, universe_size, d, spec.kernel_time, spec.seed, params)

    def _anchor_matrix(self) -> np.ndarray:
        return self.params["positions" if self.variant == CDK else "influence"]

    def _default_source_space(self, source: int) -> np.ndarray:
        rng = np.random.default_rng(_source_space_seed(self.seed, source))
        return _init_matrix(rng, self.universe_size, self.latent_dim)

    def _target_matrix(self, source: int, allocate: bool = False) -> np.ndarray:
        if self.variant == CDK:
            return self.params["positions"]
        if self.variant == PAE:
            return self.params["susceptibility"]
        space = self.source_susceptibility.get(source)
        if space is None:
            space = self._default_source_space(source)
            if allocate:
                self.source_susceptibility[source] = space
        return space

    def _check_node(self, v: int, what: str):
        if not 0 <= v < self.universe_size:
            raise ValueError(f"{what} {v} outside universe [0, {self.universe_size})")

    def score(self, source: int, v: int) -> float:
        """Negative squared latent distance between source side and target side."""
        self._check_node(source, "source")
        self._check_node(v, "node")
        if v == source:
            raise ValueError("cannot score the source against itself")
        diff = self._anchor_matrix()[source] - self._target_matrix(source)[v]
        return -float(diff @ diff)

    def kernel_score(self, source: int, v: int) -> float:
        """Heat kernel value at the model's (kernel_time, latent_dim)."""
        return heat_kernel(self.kernel_time, self.latent_dim, -self.score(source, v))

    def predict(self, source: int, k: int) -> PredictedRanking:
        """Top-k candidates by descending score; ties broken by ascending id."""
        self._check_node(source, "source")
        if not 1 <= k <= self.universe_size - 1:
            raise ValueError(f"k must be in [1, {self.universe_size - 1}], got {k}")
        anchor = self._anchor_matrix()[source]
        diff = self._target_matrix(source) - anchor
        scores = -(diff * diff).sum(axis=1)
        ids = np.arange(self.universe_size)
        order = np.lexsort((ids, -scores))
        ranking = tuple(int(v) for v in order if v != source)[:k]
        return PredictedRanking(source=source, ranking=ranking)

    def save(self, path):
        """Versioned JSON dump; floats round-trip exactly."""
        payload = {
            "format_version": MODEL_FORMAT_VERSION,
            "variant": self.variant,
            "universe_size": self.universe_size,
            "latent_dim": self.latent_dim,
            "kernel_time": self.kernel_time,
            "seed": self.seed,
            "params": {name: m.tolist() for name, m in self.params.items()},
            "source_susceptibility": {
                str(s): m.tolist() for s, m in sorted(self.source_susceptibility.items())
            },
        }
        with open(path, "w", encoding="utf-8") as f:
            json.dump(payload, f, sort_keys=True)

    @classmethod
    def load(cls, path) -> "EmbeddingModel":
        with open(path, encoding="utf-8") as f:
            payload = json.load(f)
        version = payload.get("format_version")
        if version != MODEL_FORMAT_VERSION:
            raise ValidationError(f"unsupported model format version {version!r}")
        return cls(
            variant=payload["variant"],
            universe_size=payload["universe_size"],
            latent_dim=payload["latent_dim"],
            kernel_time=payload["kernel_time"],
            seed=payload["seed"],
            params={k: np.array(v, dtype=np.float64) for k, v in payload["params"].items()},
            source_susceptibility={
                int(s): np.array(v, dtype=np.float64)
                for s, v in payload["source_susceptibility"].items()
            },
        )


def _draw_event_plan(rng, nodes: np.ndarray, universe_size: int, n_events: int,
                     negatives: int):
    """Sample one cascade visit's constraint plan.

    Returns (ei, lj, neg): member node per event, later member or -1, and
    the non-member negatives (-1 when the cascade covers the universe).
    """
    n = nodes.shape[0] - 1  # members after the source
    mi = rng.integers(0, n, size=n_events)
    u = rng.random(n_events)
    remaining = n - 1 - mi
    offset = np.where(remaining > 0, 1 + (u * remaining).astype(np.int64), 0)
    ei = nodes[1 + mi]
    lj = np.where(remaining > 0, nodes[1 + mi + offset], -1)
    if universe_size > nodes.shape[0]:
        neg = rng.integers(0, universe_size, size=(n_events, negatives))
        in_cascade = np.zeros(universe_size, dtype=bool)
        in_cascade[nodes] = True
        bad = in_cascade[neg]
        while bad.any():
            neg[bad] = rng.integers(0, universe_size, size=int(bad.sum()))
            bad = in_cascade[neg]
    else:
        neg = np.full((n_events, negatives), -1, dtype=np.int64)
    return ei.astype(np.int64), lj.astype(np.int64), neg.astype(np.int64)


def train(spec: PredictorSpec, train_set: CascadeSet) -> EmbeddingModel:
    """Train an embedding model on a cascade set; deterministic per spec.seed."""
    if spec.variant not in TRAINABLE:
        raise ValidationError(f"variant {spec.variant} does not support training")
    if len(train_set) == 0:
        raise ValidationError("training set is empty")
    model = EmbeddingModel.initialize(spec, train_set.universe_size)
    rng = np.random.default_rng(np.random.SeedSequence((spec.seed, 2)))
    anchor = model._anchor_matrix()
    node_arrays = [np.asarray(c.nodes, dtype=np.int64) for c in train_set.cascades]
    for _ in range(spec.epochs):
        for c, nodes in zip(train_set.cascades, node_arrays):
            if len(c) < 2:
                continue  # nothing to rank for a source-only cascade
            n_events = spec.pairs_per_cascade or 5 * len(c)
            ei, lj, neg = _draw_event_plan(
                rng, nodes, train_set.universe_size, n_events, spec.negatives_per_pair
            )
            targets = model._target_matrix(c.source, allocate=True)
            _sgd_cascade(anchor, targets, c.source, ei, lj, neg,
                         spec.margin, spec.learning_rate)
        _check_finite(model)
    return model


def _check_finite(model: EmbeddingModel):
    for name, matrix in model.params.items():
        if not np.isfinite(matrix).all():
            raise TrainingError(f"non-finite values in {name}")
    for s, matrix in model.source_susceptibility.items():
        if not np.isfinite(matrix).all():
            raise TrainingError(f"non-finite values in susceptibility space of source {s}")


class RandomPredictor:
    """Seeded uniform-permutation baseline with the same predict interface."""

    variant = RANDOM

    def __init__(self, universe_size: int, seed: int = 0):
        if universe_size < 2:
            raise ValidationError("universe_size must be >= 2")
        self.universe_size = universe_size
        self.seed = seed

    def predict(self, source: int, k: int) -> PredictedRanking:
        if not 0 <= source < self.universe_size:
            raise ValueError(f"source {source} outside universe [0, {self.universe_size})")
        if not 1 <= k <= self.universe_size - 1:
            raise ValueError(f"k must be in [1, {self.universe_size - 1}], got {k}")
        rng = np.random.default_rng(np.random.SeedSequence((self.seed, source)))
        perm = rng.permutation(self.universe_size)
        ranking = tuple(int(v) for v in perm if v != source)[:k]
        return PredictedRanking(source=source, ranking=ranking)


def build_predictor(spec: PredictorSpec, train_set: CascadeSet):
    """Uniform entry point used by the experiment harness."""
    if spec.variant in TRAINABLE:
        return train(spec, train_set)
    if spec.variant == RANDOM:
        return RandomPredictor(train_set.universe_size, spec.seed)
    raise ValidationError(
        f"variant {spec.variant} cannot be built from a cascade set; "
        "supply a rankings file instead"
    )
