"""Random graph generators.

Two topologies are supported: Erdos-Renyi G(n, p) with p chosen to hit a
target average degree, and a static-model scale-free graph where node i
carries weight (i + 1)^(-alpha) and weighted pair sampling is repeated
until an exact edge count is reached.  With alpha = 0.5 the static model
yields a degree distribution with tail exponent close to 3.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, ValidationError

ER = "ER"
BA_STATIC = "BA_STATIC"
TOPOLOGIES = (ER, BA_STATIC)


@dataclass(frozen=True)
class GraphSpec:
    """Target parameters for one generated graph."""

    topology: str
    node_count: int
    avg_degree: float
    weight_exponent: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.topology not in TOPOLOGIES:
            raise ValidationError(f"unknown topology {self.topology!r}")
        if self.node_count < 2:
            raise ValidationError("node_count must be at least 2")
        # avg_degree == node_count - 1 is allowed: it forces p = 1 (complete graph).
        if not 0.0 < self.avg_degree <= self.node_count - 1:
            raise ValidationError(
                f"avg_degree must be in (0, {self.node_count - 1}], got {self.avg_degree}"
            )
        if self.weight_exponent < 0:
            raise ValidationError("weight_exponent must be >= 0")


class Graph:
    """Undirected simple graph on dense integer node ids 0..node_count-1.

    Edges are stored canonically as (u, v) with u < v; self-loops and
    duplicates are rejected at construction.
    """

    __slots__ = ("node_count", "edges", "_adjacency")

    def __init__(self, node_count: int, edges):
        if node_count < 1:
            raise ValidationError("node_count must be positive")
        canon = set()
        for u, v in edges:
            u, v = int(u), int(v)
            if u == v:
                raise ValidationError(f"self-loop at node {u}")
            if not (0 <= u < node_count and 0 <= v < node_count):
                raise ValidationError(f"edge ({u}, {v}) outside node range [0, {node_count})")
            canon.add((u, v) if u < v else (v, u))
        self.node_count = int(node_count)
        self.edges = frozenset(canon)
        self._adjacency = None

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    @property
    def adjacency(self) -> list:
        """Per-node sorted neighbor arrays (built lazily, cached)."""
        if self._adjacency is None:
            lists = [[] for _ in range(self.node_count)]
            for u, v in self.edges:
                lists[u].append(v)
                lists[v].append(u)
            self._adjacency = [np.array(sorted(nb), dtype=np.int64) for nb in lists]
        return self._adjacency

    def neighbors(self, v: int) -> np.ndarray:
        return self.adjacency[v]

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    def degrees(self) -> np.ndarray:
        return np.array([len(nb) for nb in self.adjacency], dtype=np.int64)

    def __eq__(self, other):
        return (
            isinstance(other, Graph)
            and self.node_count == other.node_count
            and self.edges == other.edges
        )

    def __hash__(self):
        return hash((self.node_count, self.edges))

    def __repr__(self):
        return f"Graph(node_count={self.node_count}, edge_count={self.edge_count})"


def gen_er(spec: GraphSpec) -> Graph:
    """Erdos-Renyi graph: every node pair is an edge with p = avg_degree/(N-1)."""
    if spec.topology != ER:
        raise ValidationError(f"gen_er requires topology ER, got {spec.topology}")
    n = spec.node_count
    p = spec.avg_degree / (n - 1)
    rng = np.random.default_rng(spec.seed)
    iu, ju = np.triu_indices(n, k=1)
    mask = rng.random(iu.shape[0]) < p
    return Graph(n, zip(iu[mask].tolist(), ju[mask].tolist()))


def gen_ba_static(spec: GraphSpec) -> Graph:
    """Static-model scale-free graph with exactly floor(N * avg_degree / 2) edges.

    Node pairs are drawn with probability proportional to w_i * w_j where
    w_i = (i + 1)^(-weight_exponent); self-pairs and already-present edges
    are rejected and redrawn.  Raises ConvergenceError if the target edge
    count is not reached within 1000 * target draws.
    """
    if spec.topology != BA_STATIC:
        raise ValidationError(f"gen_ba_static requires topology BA_STATIC, got {spec.topology}")
    n = spec.node_count
    target = int(n * spec.avg_degree / 2)
    max_edges = n * (n - 1) // 2
    if target > max_edges:
        raise ValidationError(
            f"requested {target} edges but only {max_edges} distinct pairs exist"
        )
    weights = np.arange(1, n + 1, dtype=np.float64) ** (-spec.weight_exponent)
    prob = weights / weights.sum()
    rng = np.random.default_rng(spec.seed)

    edges = set()
    draws = 0
    max_draws = 1000 * max(target, 1)
    while len(edges) < target:
        batch = max(2 * (target - len(edges)), 64)
        if draws + batch > max_draws:
            batch = max_draws - draws
            if batch <= 0:
                raise ConvergenceError(
                    f"static model reached {len(edges)}/{target} edges "
                    f"after {draws} draws"
                )
        us = rng.choice(n, size=batch, p=prob)
        vs = rng.choice(n, size=batch, p=prob)
        draws += batch
        for u, v in zip(us.tolist(), vs.tolist()):
            if u == v:
                continue
            e = (u, v) if u < v else (v, u)
            edges.add(e)
            if len(edges) == target:
                break
    return Graph(n, edges)


def generate(spec: GraphSpec) -> Graph:
    """Dispatch on spec.topology."""
    if spec.topology == ER:
        return gen_er(spec)
    return gen_ba_static(spec)
