"""Spreading-cascade simulators: independent cascade, linear threshold, SI.

All three return the infection order only.  LT and SI use the Gillespie
algorithm (event-driven, rate-proportional selection with exponential
waiting times), so the generated order is an exact sample of the
continuous-time process.  Cascade sets of a fixed length L are produced
by rejection: a run that infects at least L nodes is truncated to its
first L, shorter runs are discarded.  Truncation keeps the raw prefix,
so the per-mechanism ordering statistics are undistorted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import GenerationError, ValidationError
from .graphs import Graph

IC = "IC"
LT = "LT"
SI = "SI"
MECHANISMS = (IC, LT, SI)


@dataclass(frozen=True)
class Cascade:
    """Ordered, duplicate-free sequence of infected nodes; nodes[0] is the source."""

    nodes: tuple

    def __post_init__(self):
        if len(self.nodes) == 0:
            raise ValidationError("cascade must be nonempty")
        if len(set(self.nodes)) != len(self.nodes):
            raise ValidationError("cascade contains duplicate nodes")

    @property
    def source(self) -> int:
        return self.nodes[0]

    def __len__(self):
        return len(self.nodes)

    def __iter__(self):
        return iter(self.nodes)


@dataclass(frozen=True)
class CascadeSet:
    """A collection of cascades over a node universe 0..universe_size-1."""

    cascades: tuple
    universe_size: int

    def __post_init__(self):
        if len(self.cascades) == 0:
            raise ValidationError("cascade set must contain at least one cascade")
        if self.universe_size < 1:
            raise ValidationError("universe_size must be positive")
        for c in self.cascades:
            for v in c.nodes:
                if not 0 <= v < self.universe_size:
                    raise ValidationError(
                        f"node {v} outside universe [0, {self.universe_size})"
                    )

    def __len__(self):
        return len(self.cascades)

    def __iter__(self):
        return iter(self.cascades)


@dataclass(frozen=True)
class SimConfig:
    """Parameters for cascade-set generation.

    lt_threshold None means per-node uniform(0,1) thresholds; a float
    means the same fixed threshold for every node.
    """

    mechanism: str
    target_length: int
    ic_prob: float = 0.3
    si_rate: float = 1.0
    lt_threshold: float | None = None
    max_attempts: int = 100

    def __post_init__(self):
        if self.mechanism not in MECHANISMS:
            raise ValidationError(f"unknown mechanism {self.mechanism!r}")
        if self.target_length < 1:
            raise ValidationError("target_length must be positive")
        # ic_prob == 0 is accepted so that hopeless configs surface as a
        # generation failure rather than an upfront rejection.
        if not 0.0 <= self.ic_prob <= 1.0:
            raise ValidationError("ic_prob must be in [0, 1]")
        if self.si_rate <= 0:
            raise ValidationError("si_rate must be positive")
        if self.max_attempts < 1:
            raise ValidationError("max_attempts must be positive")


def _check_source(graph: Graph, source: int):
    if not 0 <= source < graph.node_count:
        raise ValidationError(f"source {source} outside node range [0, {graph.node_count})")


def simulate_ic(graph: Graph, ic_prob: float, source: int, seed=None) -> Cascade:
    """Synchronous independent cascade from one source.

    Each newly infected node gets a single chance to infect each of its
    still-uninfected neighbors with probability ic_prob.  Nodes infected
    within the same round are appended in randomized order.  Runs until
    a round produces no new infection.
    """
    _check_source(graph, source)
    if not 0.0 <= ic_prob <= 1.0:
        raise ValidationError("ic_prob must be in [0, 1]")
    rng = np.random.default_rng(seed)
    infected = np.zeros(graph.node_count, dtype=bool)
    infected[source] = True
    order = [source]
    frontier = [source]
    while frontier:
        newly = []
        for u in frontier:
            for w in graph.neighbors(u):
                if not infected[w] and rng.random() < ic_prob:
                    infected[w] = True
                    newly.append(int(w))
        if newly:
            rng.shuffle(newly)
            order.extend(newly)
        frontier = newly
    return Cascade(tuple(order))


def si_infection_times(graph: Graph, si_rate: float, source: int, seed=None, max_len=None):
    """Gillespie SI simulation; returns (infection order, infection times).

    A susceptible node with k infected neighbors becomes infected at rate
    si_rate * k.  At each step the waiting time is exponential in the total
    rate and the infected node is drawn proportionally to its rate.  Runs
    until the reachable component is exhausted (or max_len nodes infected).
    Times start at 0.0 for the source.
    """
    _check_source(graph, source)
    if si_rate <= 0:
        raise ValidationError("si_rate must be positive")
    rng = np.random.default_rng(seed)
    n = graph.node_count
    infected = np.zeros(n, dtype=bool)
    infected[source] = True
    # pressure[v] = number of infected neighbors of the susceptible node v
    pressure = np.zeros(n, dtype=np.float64)
    for w in graph.neighbors(source):
        pressure[w] += 1.0
    order = [source]
    times = [0.0]
    t = 0.0
    while max_len is None or len(order) < max_len:
        total = pressure.sum()
        if total <= 0.0:
            break
        t += rng.exponential(1.0 / (si_rate * total))
        u = rng.random() * total
        v = int(np.searchsorted(np.cumsum(pressure), u, side="right"))
        infected[v] = True
        pressure[v] = 0.0
        for w in graph.neighbors(v):
            if not infected[w]:
                pressure[w] += 1.0
        order.append(v)
        times.append(t)
    return order, times


def simulate_si_gillespie(graph: Graph, si_rate: float, source: int, seed=None, max_len=None) -> Cascade:
    """SI cascade; infection order of `si_infection_times`."""
    order, _ = si_infection_times(graph, si_rate, source, seed=seed, max_len=max_len)
    return Cascade(tuple(order))


def simulate_lt_gillespie(graph: Graph, threshold, source: int, seed=None, max_len=None) -> Cascade:
    """Gillespie linear-threshold cascade.

    Every node draws a threshold up front (uniform(0,1) when `threshold`
    is None, else the given fixed value).  An inactive node is eligible
    once its active-neighbor fraction reaches its threshold; each eligible
    node activates at unit rate, so the next activation is uniform over
    the eligible set.  Activation is monotone: eligibility never reverts.
    """
    _check_source(graph, source)
    rng = np.random.default_rng(seed)
    n = graph.node_count
    if threshold is None:
        thresholds = rng.random(n)
    else:
        thresholds = np.full(n, float(threshold))
    degrees = graph.degrees()
    active = np.zeros(n, dtype=bool)
    active[source] = True
    active_nb = np.zeros(n, dtype=np.int64)
    eligible = np.zeros(n, dtype=bool)

    def _activate(v):
        active[v] = True
        eligible[v] = False
        for w in graph.neighbors(v):
            if not active[w]:
                active_nb[w] += 1
                if not eligible[w] and active_nb[w] / degrees[w] >= thresholds[w]:
                    eligible[w] = True

    _activate(source)
    order = [source]
    while max_len is None or len(order) < max_len:
        pool = np.flatnonzero(eligible)
        if pool.size == 0:
            break
        rng.exponential(1.0 / pool.size)  # waiting time; order-irrelevant but part of the process
        v = int(pool[rng.integers(pool.size)])
        _activate(v)
        order.append(v)
    return Cascade(tuple(order))


def _simulate_one(graph: Graph, config: SimConfig, source: int, rng) -> Cascade:
    if config.mechanism == IC:
        return simulate_ic(graph, config.ic_prob, source, seed=rng)
    if config.mechanism == SI:
        return simulate_si_gillespie(
            graph, config.si_rate, source, seed=rng, max_len=config.target_length
        )
    return simulate_lt_gillespie(
        graph, config.lt_threshold, source, seed=rng, max_len=config.target_length
    )


def generate_cascade_set(graph: Graph, config: SimConfig, m: int, seed) -> CascadeSet:
    """Generate exactly m cascades of length config.target_length.

    Sources are uniform random per attempt; a run reaching target_length
    infections is truncated to its first target_length nodes, shorter runs
    are rejected.  Each attempt uses an independently derived random
    stream, so results do not depend on scheduling and are reproducible
    per seed.  Raises GenerationError when fewer than m runs are accepted
    within m * config.max_attempts attempts.
    """
    if m < 1:
        raise ValidationError("m must be positive")
    if config.target_length > graph.node_count:
        raise ValidationError(
            f"target_length {config.target_length} exceeds node count {graph.node_count}"
        )
    accepted = []
    budget = m * config.max_attempts
    attempt = 0
    while len(accepted) < m:
        if attempt >= budget:
            rate = len(accepted) / attempt
            raise GenerationError(
                f"accepted {len(accepted)}/{m} cascades in {attempt} attempts "
                f"(acceptance rate {rate:.4f}); increase max_attempts or loosen the config"
            )
        rng = np.random.default_rng(np.random.SeedSequence((seed, attempt)))
        source = int(rng.integers(graph.node_count))
        run = _simulate_one(graph, config, source, rng)
        if len(run) >= config.target_length:
            accepted.append(Cascade(run.nodes[: config.target_length]))
        attempt += 1
    return CascadeSet(tuple(accepted), graph.node_count)
