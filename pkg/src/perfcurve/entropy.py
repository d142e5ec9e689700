"""Disorder metrics for cascade sets.

The central quantity is the average pairwise comparison entropy (APCE):
for every unordered node pair that co-occurs in the data, the binary
entropy of "i comes before j" is weighted by how often the pair co-occurs
and the weighted entropies are averaged over the total co-occurrence
count.  APCE is 0 when every co-occurring pair keeps a fixed relative
order and approaches 1 when relative orders are coin flips.

Block entropy over sliding windows is provided for reference; it is a
poor fit for node sequences (huge alphabet, blind to non-adjacent
structure) and is not used by the evaluation pipeline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import InsufficientDataError, ValidationError
from .simulate import CascadeSet


@dataclass
class PairwiseOrderStats:
    """Order counts per unordered node pair.

    pair_counts maps a canonical pair (i, j) with i < j to
    (times i appeared before j, times i and j co-occurred).
    """

    pair_counts: dict = field(default_factory=dict)

    @property
    def total_pair_occurrences(self) -> int:
        return sum(n for _, n in self.pair_counts.values())

    def prob_first_before_second(self, i: int, j: int) -> float:
        """p_ij for any ordering of the arguments (p_ji = 1 - p_ij)."""
        a, b = (i, j) if i < j else (j, i)
        w, n = self.pair_counts[(a, b)]
        p = w / n
        return p if i < j else 1.0 - p


def pairwise_stats(cs: CascadeSet) -> PairwiseOrderStats:
    """Accumulate before/after counts over every in-cascade position pair."""
    counts = {}
    for c in cs.cascades:
        nodes = c.nodes
        if len(set(nodes)) != len(nodes):
            raise ValidationError("cascade contains duplicate nodes")
        for a in range(len(nodes)):
            for b in range(a + 1, len(nodes)):
                u, v = nodes[a], nodes[b]
                key = (u, v) if u < v else (v, u)
                w, n = counts.get(key, (0, 0))
                counts[key] = (w + (1 if u < v else 0), n + 1)
    return PairwiseOrderStats(counts)


def pce(p: float) -> float:
    """Binary entropy of a before/after probability, in bits (0*log 0 := 0)."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability must be in [0, 1], got {p}")
    if p == 0.0 or p == 1.0:
        return 0.0
    q = 1.0 - p
    return -(p * math.log2(p) + q * math.log2(q))


def apce(stats: PairwiseOrderStats) -> float:
    """Co-occurrence-weighted mean of the pairwise comparison entropies."""
    total = stats.total_pair_occurrences
    if total <= 0:
        raise InsufficientDataError("no co-occurring node pairs")
    acc = 0.0
    for w, n in stats.pair_counts.values():
        acc += n * pce(w / n)
    return acc / total


def apce_of(cs: CascadeSet) -> float:
    """Convenience wrapper: pairwise_stats + apce."""
    return apce(pairwise_stats(cs))


def block_entropy(sequences, n: int) -> float:
    """Shannon entropy (bits) of length-n blocks pooled across sequences.

    A window of length n slides over each sequence; block frequencies are
    pooled over all sequences.  Sequences shorter than n contribute no
    blocks; if no sequence is long enough a ValueError is raised.
    """
    if n < 1:
        raise ValueError("block length must be positive")
    counts = {}
    total = 0
    for seq in sequences:
        seq = tuple(seq)
        for start in range(len(seq) - n + 1):
            block = seq[start : start + n]
            counts[block] = counts.get(block, 0) + 1
            total += 1
    if total == 0:
        raise ValueError(f"no sequence is long enough for block length {n}")
    acc = 0.0
    for count in counts.values():
        p = count / total
        acc -= p * math.log2(p)
    return acc
