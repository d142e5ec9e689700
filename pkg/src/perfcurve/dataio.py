"""File formats and empirical-data preparation.

Formats (all plain text, '#' lines are comments):

* edge list       - header "# nodes=N", then one "u v" pair per line.
* cascade file    - one cascade per line, whitespace-separated node ids,
                    first id is the source.  A token may carry a trailing
                    ",timestamp" which is accepted and discarded (only
                    the order matters).
* rankings file   - one line per test cascade: "source: r1 r2 r3 ...".
* results CSV     - columns topology,mechanism,model,N,L,m,seed,apce,map,smap.
* curves JSON     - fitted curve parameters per model group.

External string ids are mapped to dense internal integers in first-seen
order via NodeIdMap.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .curvefit import FittedCurve, ScalingPoint
from .errors import InsufficientDataError, ParseError, ValidationError
from .graphs import Graph
from .metrics import PredictedRanking
from .simulate import Cascade, CascadeSet

RESULT_COLUMNS = ("topology", "mechanism", "model", "N", "L", "m", "seed",
                  "apce", "map", "smap")
SMAP_CONSISTENCY_TOL = 1e-12


@dataclass
class NodeIdMap:
    """Bijection between external string labels and dense internal ids."""

    to_internal: dict = field(default_factory=dict)
    labels: list = field(default_factory=list)

    def add(self, label: str) -> int:
        idx = self.to_internal.get(label)
        if idx is None:
            idx = len(self.labels)
            self.to_internal[label] = idx
            self.labels.append(label)
        return idx

    def internal(self, label: str) -> int:
        try:
            return self.to_internal[label]
        except KeyError:
            raise ParseError(f"unknown node id {label!r}") from None

    def label(self, internal: int) -> str:
        return self.labels[internal]

    def __len__(self):
        return len(self.labels)

    @classmethod
    def identity(cls, size: int) -> "NodeIdMap":
        labels = [str(i) for i in range(size)]
        return cls({s: i for i, s in enumerate(labels)}, labels)


def _data_lines(path):
    with open(path, encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            yield lineno, line


def _strip_timestamp(token: str) -> str:
    return token.split(",", 1)[0]


def load_cascades(path) -> tuple[CascadeSet, NodeIdMap]:
    """Parse a cascade file into dense internal ids.

    The universe is the set of distinct nodes seen in the file.
    """
    id_map = NodeIdMap()
    cascades = []
    for lineno, line in _data_lines(path):
        labels = [_strip_timestamp(tok) for tok in line.split()]
        if len(set(labels)) != len(labels):
            raise ParseError(f"{path}: line {lineno}: duplicate node within cascade")
        cascades.append(Cascade(tuple(id_map.add(lab) for lab in labels)))
    if not cascades:
        raise ParseError(f"{path}: no cascades found")
    return CascadeSet(tuple(cascades), universe_size=len(id_map)), id_map


def write_cascades(cs: CascadeSet, path, id_map: NodeIdMap | None = None):
    """One cascade per line; internal ids are written as-is when no map is given."""
    with open(path, "w", encoding="utf-8") as f:
        for c in cs.cascades:
            labels = (str(v) if id_map is None else id_map.label(v) for v in c.nodes)
            f.write(" ".join(labels) + "\n")


def subsample_cascade(c: Cascade, target_length: int, seed) -> Cascade:
    """Keep the source plus a uniform subset of later nodes, order preserved."""
    if target_length < 2:
        raise ValidationError("target_length must be >= 2")
    if len(c) < target_length:
        raise InsufficientDataError(
            f"cascade of length {len(c)} is shorter than target {target_length}"
        )
    if len(c) == target_length:
        return c
    rng = np.random.default_rng(seed)
    keep = np.sort(rng.choice(len(c) - 1, size=target_length - 1, replace=False)) + 1
    return Cascade((c.nodes[0],) + tuple(c.nodes[i] for i in keep))


def propagation_subgraph_size(cs: CascadeSet) -> int:
    """Number of distinct nodes appearing anywhere in the set."""
    seen = set()
    for c in cs.cascades:
        seen.update(c.nodes)
    return len(seen)


def load_graph(path) -> Graph:
    """Read an edge list with its "# nodes=N" header."""
    node_count = None
    with open(path, encoding="utf-8") as f:
        for raw in f:
            line = raw.strip()
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("nodes="):
                    node_count = int(body[len("nodes="):])
                continue
            if line:
                break
    if node_count is None:
        raise ParseError(f"{path}: missing '# nodes=N' header")
    edges = []
    for lineno, line in _data_lines(path):
        parts = line.split()
        if len(parts) != 2:
            raise ParseError(f"{path}: line {lineno}: expected 'u v', got {line!r}")
        try:
            edges.append((int(parts[0]), int(parts[1])))
        except ValueError:
            raise ParseError(f"{path}: line {lineno}: non-integer node id") from None
    return Graph(node_count, edges)


def write_graph(graph: Graph, path):
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"# nodes={graph.node_count}\n")
        for u, v in sorted(graph.edges):
            f.write(f"{u} {v}\n")


def load_external_predictions(path, id_map: NodeIdMap) -> list:
    """Parse "source: r1 r2 ..." ranking lines using an existing id map."""
    rankings = []
    for lineno, line in _data_lines(path):
        head, sep, tail = line.partition(":")
        if not sep:
            raise ParseError(f"{path}: line {lineno}: expected 'source: r1 r2 ...'")
        labels = [_strip_timestamp(tok) for tok in tail.split()]
        if len(set(labels)) != len(labels):
            raise ParseError(f"{path}: line {lineno}: duplicate candidate in ranking")
        try:
            source = id_map.internal(head.strip())
            ranking = tuple(id_map.internal(lab) for lab in labels)
        except ParseError as exc:
            raise ParseError(f"{path}: line {lineno}: {exc}") from None
        rankings.append(PredictedRanking(source=source, ranking=ranking))
    if not rankings:
        raise ParseError(f"{path}: no rankings found")
    return rankings


def write_external_predictions(rankings, path, id_map: NodeIdMap | None = None):
    with open(path, "w", encoding="utf-8") as f:
        for pred in rankings:
            fmt = (lambda v: str(v)) if id_map is None else id_map.label
            f.write(f"{fmt(pred.source)}: " + " ".join(fmt(v) for v in pred.ranking) + "\n")


def _float_repr(x: float) -> str:
    return repr(float(x))


def write_results_csv(points, path):
    """Canonically ordered CSV of scaling points (stable bytes per input set)."""
    rows = sorted(points, key=lambda p: (p.topology, p.mechanism, p.model,
                                         p.network_size, p.target_length, p.m, p.seed))
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(RESULT_COLUMNS)
        for p in rows:
            writer.writerow([
                p.topology, p.mechanism, p.model, p.network_size, p.target_length,
                p.m, p.seed, _float_repr(p.apce), _float_repr(p.map_value),
                _float_repr(p.smap_value),
            ])


def read_results_csv(path) -> list:
    """Load scaling points, cross-checking smap = map * N / L on every row."""
    points = []
    with open(path, encoding="utf-8", newline="") as f:
        reader = csv.DictReader(f)
        missing = set(RESULT_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise ParseError(f"{path}: missing columns {sorted(missing)}")
        for lineno, row in enumerate(reader, start=2):
            point = ScalingPoint(
                apce=float(row["apce"]),
                map_value=float(row["map"]),
                smap_value=float(row["smap"]),
                network_size=int(row["N"]),
                target_length=int(row["L"]),
                m=int(row["m"]),
                mechanism=row["mechanism"],
                topology=row["topology"],
                model=row["model"],
                seed=int(row["seed"]),
            )
            expected = point.map_value * point.network_size / point.target_length
            if abs(expected - point.smap_value) > SMAP_CONSISTENCY_TOL * max(1.0, abs(expected)):
                raise ParseError(
                    f"{path}: line {lineno}: smap {point.smap_value} inconsistent "
                    f"with map*N/L = {expected}"
                )
            points.append(point)
    if not points:
        raise ParseError(f"{path}: no data rows")
    return points


def write_curves_json(curves: dict, path):
    """Serialize fitted curves keyed by model name."""
    payload = {
        "curves": [
            {
                "model": model,
                "y0": curve.y0,
                "A": curve.A,
                "B": curve.B,
                "r_squared": curve.r_squared,
                "n_points": curve.n_points,
                "degenerate": curve.degenerate,
            }
            for model, curve in sorted(curves.items())
        ]
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")


def read_curves_json(path) -> dict:
    with open(path, encoding="utf-8") as f:
        payload = json.load(f)
    return {
        entry["model"]: FittedCurve(
            y0=entry["y0"], A=entry["A"], B=entry["B"],
            r_squared=entry["r_squared"], n_points=entry["n_points"],
            degenerate=entry.get("degenerate", False),
        )
        for entry in payload["curves"]
    }
