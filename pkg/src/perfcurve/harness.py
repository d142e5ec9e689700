"""End-to-end experiment orchestration.

A cell is one experiment: generate (or load + subsample) a cascade set,
measure its disorder, split train/test, train every configured predictor,
score full rankings on the test sources, and emit one scaling point per
predictor.  A plan is a list of cells; sweeping a plan yields the results
table that the curve fit and the figures consume.

All per-stage randomness is derived from the cell seed, so any cell is
reproducible in isolation and sweep output does not depend on execution
order (rows are canonically sorted before writing).
"""

from __future__ import annotations

import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .curvefit import ScalingPoint, fit_exp_decay
from .dataio import (
    load_cascades,
    propagation_subgraph_size,
    read_results_csv,
    subsample_cascade,
    write_curves_json,
    write_results_csv,
)
from .entropy import apce_of
from .errors import InsufficientDataError, ValidationError
from .figures import render_scaling_figure
from .graphs import GraphSpec, generate
from .metrics import evaluate_rankings
from .predictors import PredictorSpec, build_predictor
from .simulate import CascadeSet, SimConfig, generate_cascade_set

APCE_SCOPES = ("full", "train")


def derive_seed(*parts) -> int:
    """Stable child seed from integer parts (order-sensitive)."""
    seq = np.random.SeedSequence(tuple(int(p) for p in parts))
    return int(seq.generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class ExperimentCell:
    """One experiment: either synthetic (graph_spec + sim_config) or
    empirical (cascades_path + target_length)."""

    m: int
    split_ratio: float
    predictors: tuple
    seed: int
    graph_spec: GraphSpec | None = None
    sim_config: SimConfig | None = None
    cascades_path: str | None = None
    target_length: int | None = None
    apce_scope: str = "full"
    use_propagation_subgraph: bool | None = None  # None: yes for empirical, no for synthetic
    allow_long: bool = False
    label: str | None = None

    def __post_init__(self):
        if self.m < 2:
            raise ValidationError("m must be >= 2 (need train and test cascades)")
        if not 0.0 < self.split_ratio < 1.0:
            raise ValidationError("split_ratio must be in (0, 1)")
        if not self.predictors:
            raise ValidationError("cell needs at least one predictor")
        if self.apce_scope not in APCE_SCOPES:
            raise ValidationError(f"apce_scope must be one of {APCE_SCOPES}")
        if self.cascades_path is None:
            if self.graph_spec is None or self.sim_config is None:
                raise ValidationError(
                    "synthetic cell needs graph_spec and sim_config "
                    "(or set cascades_path for empirical data)"
                )
            limit = self.graph_spec.node_count // 10
            if not self.allow_long and self.sim_config.target_length > limit:
                raise ValidationError(
                    f"target_length {self.sim_config.target_length} exceeds "
                    f"node_count/10 = {limit}; pass allow_long to override"
                )
        else:
            if self.graph_spec is not None or self.sim_config is not None:
                raise ValidationError("empirical cell must not carry graph/sim specs")
            if self.target_length is None or self.target_length < 2:
                raise ValidationError("empirical cell needs target_length >= 2")

    @property
    def is_synthetic(self) -> bool:
        return self.cascades_path is None

    @property
    def length(self) -> int:
        return self.sim_config.target_length if self.is_synthetic else self.target_length

    @property
    def topology_label(self) -> str:
        if self.is_synthetic:
            return self.graph_spec.topology
        return self.label or "empirical"

    @property
    def mechanism_label(self) -> str:
        return self.sim_config.mechanism if self.is_synthetic else "data"


@dataclass(frozen=True)
class ExperimentPlan:
    cells: tuple

    def __post_init__(self):
        if not self.cells:
            raise ValidationError("plan contains no cells")


def split(cs: CascadeSet, ratio: float, seed) -> tuple[CascadeSet, CascadeSet]:
    """Seeded uniform partition; train gets floor(ratio * m) cascades."""
    if not 0.0 < ratio < 1.0:
        raise ValidationError("split ratio must be in (0, 1)")
    m = len(cs)
    n_train = int(ratio * m)
    if n_train < 1 or m - n_train < 1:
        raise InsufficientDataError(
            f"cannot split {m} cascades at ratio {ratio}: both sides need >= 1"
        )
    perm = np.random.default_rng(seed).permutation(m)
    train_idx = np.sort(perm[:n_train])
    test_idx = np.sort(perm[n_train:])
    return (
        CascadeSet(tuple(cs.cascades[i] for i in train_idx), cs.universe_size),
        CascadeSet(tuple(cs.cascades[i] for i in test_idx), cs.universe_size),
    )


def _prepare_cascades(cell: ExperimentCell):
    """Returns (cascade set, smap network size)."""
    if cell.is_synthetic:
        gspec = replace(cell.graph_spec, seed=derive_seed(cell.seed, 0))
        graph = generate(gspec)
        cs = generate_cascade_set(graph, cell.sim_config, cell.m, derive_seed(cell.seed, 1))
        whole = graph.node_count
    else:
        raw, _ = load_cascades(cell.cascades_path)
        length = cell.target_length
        eligible = [c for c in raw.cascades if len(c) >= length]
        if len(eligible) < 2:
            raise InsufficientDataError(
                f"only {len(eligible)} cascades of length >= {length} in {cell.cascades_path}"
            )
        if len(eligible) > cell.m:
            rng = np.random.default_rng(derive_seed(cell.seed, 1))
            chosen = np.sort(rng.choice(len(eligible), size=cell.m, replace=False))
            eligible = [eligible[i] for i in chosen]
        sampled = tuple(
            subsample_cascade(c, length, derive_seed(cell.seed, 2, k))
            for k, c in enumerate(eligible)
        )
        cs = CascadeSet(sampled, raw.universe_size)
        whole = raw.universe_size
    use_prop = cell.use_propagation_subgraph
    if use_prop is None:
        use_prop = not cell.is_synthetic
    return cs, (propagation_subgraph_size(cs) if use_prop else whole)


def run_cell(cell: ExperimentCell) -> list:
    """Execute one cell; one ScalingPoint per configured predictor."""
    cs, network_size = _prepare_cascades(cell)
    train_cs, test_cs = split(cs, cell.split_ratio, derive_seed(cell.seed, 3))
    scope_set = train_cs if cell.apce_scope == "train" else cs
    apce_value = apce_of(scope_set)
    k_full = cs.universe_size - 1
    points = []
    for pidx, pspec in enumerate(cell.predictors):
        seeded = replace(pspec, seed=derive_seed(cell.seed, 4, pidx))
        predictor = build_predictor(seeded, train_cs)
        preds = [predictor.predict(c.source, k_full) for c in test_cs.cascades]
        result = evaluate_rankings(
            test_cs.cascades, preds, network_size, cell.length
        )
        points.append(ScalingPoint(
            apce=apce_value,
            map_value=result.map_value,
            smap_value=result.smap_value,
            network_size=network_size,
            target_length=cell.length,
            m=len(cs),
            mechanism=cell.mechanism_label,
            topology=cell.topology_label,
            model=pspec.variant,
            seed=cell.seed,
        ))
    return points


def run_sweep(plan: ExperimentPlan, strict: bool = False, workers: int = 1):
    """Run every cell; returns (sorted points, failures).

    In strict mode the first cell failure aborts the sweep; otherwise
    failures are collected as (cell index, error) and remaining cells run.
    """
    points = []
    failures = []
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {idx: pool.submit(run_cell, cell)
                       for idx, cell in enumerate(plan.cells)}
            for idx in sorted(futures):
                try:
                    points.extend(futures[idx].result())
                except Exception as exc:  # noqa: BLE001 - cell errors are data
                    if strict:
                        raise
                    failures.append((idx, exc))
    else:
        for idx, cell in enumerate(plan.cells):
            try:
                points.extend(run_cell(cell))
            except Exception as exc:  # noqa: BLE001
                if strict:
                    raise
                failures.append((idx, exc))
    points.sort(key=lambda p: (p.topology, p.mechanism, p.model, p.network_size,
                               p.target_length, p.m, p.seed))
    return points, failures


def fit_groups(points, y_field: str = "smap_value", min_distinct: int = 3):
    """Fit one decay curve per model group; groups with too few distinct
    APCE values are skipped with a warning."""
    curves = {}
    skipped = []
    for model in sorted({p.model for p in points}):
        group = [(p.apce, getattr(p, y_field)) for p in points if p.model == model]
        if len({x for x, _ in group}) < min_distinct:
            warnings.warn(f"model {model}: fewer than {min_distinct} distinct "
                          "APCE values, skipping fit", stacklevel=2)
            skipped.append(model)
            continue
        curves[model] = fit_exp_decay(group)
    return curves, skipped


def fit_and_plot(points, out_prefix, y_field: str = "smap_value", y_label: str = "SMAP"):
    """Fit per-model curves and render the report files.

    `points` may be a list of ScalingPoint or a results CSV path.
    Writes {out_prefix}_curves.json and {out_prefix}.svg; returns
    (curves, curves_path, svg_path).
    """
    if isinstance(points, (str, bytes)) or hasattr(points, "__fspath__"):
        points = read_results_csv(points)
    curves, skipped = fit_groups(points, y_field=y_field)
    if not curves:
        raise InsufficientDataError(
            f"no model group has enough distinct APCE values (skipped: {skipped})"
        )
    curves_path = f"{out_prefix}_curves.json"
    svg_path = f"{out_prefix}.svg"
    write_curves_json(curves, curves_path)
    render_scaling_figure(points, curves, svg_path, y_field=y_field, y_label=y_label)
    return curves, curves_path, svg_path


def _predictor_from_dict(entry: dict) -> PredictorSpec:
    allowed = {"variant", "latent_dim", "margin", "learning_rate", "epochs",
               "pairs_per_cascade", "negatives_per_pair", "kernel_time", "seed"}
    unknown = set(entry) - allowed
    if unknown:
        raise ValidationError(f"unknown predictor keys: {sorted(unknown)}")
    if "variant" not in entry:
        raise ValidationError("predictor entry needs a 'variant'")
    entry = dict(entry)
    entry["variant"] = str(entry["variant"]).upper()
    return PredictorSpec(**entry)


def _lt_threshold_from(value):
    if value is None or value == "uniform":
        return None
    return float(value)


def plan_from_config(config: dict, base_dir=None) -> ExperimentPlan:
    """Build a plan from the JSON config structure.

    Top-level keys (all optional except cells/predictors):
      seed, cascades_per_cell, split_ratio, apce_scope,
      allow_long_cascades, predictors, cells.
    Each cell either describes a synthetic experiment (topology,
    node_count, avg_degree, mechanism, target_length, mechanism
    parameters) or points at a cascade file (cascades, target_length).
    A cell's "seeds" list expands into one cell per seed.
    """
    import os

    base_seed = int(config.get("seed", 0))
    default_m = int(config.get("cascades_per_cell", 200))
    default_ratio = float(config.get("split_ratio", 0.8))
    default_scope = config.get("apce_scope", "full")
    default_allow_long = bool(config.get("allow_long_cascades", False))
    shared_predictors = tuple(
        _predictor_from_dict(p) for p in config.get("predictors", ())
    )
    raw_cells = config.get("cells")
    if not raw_cells:
        raise ValidationError("config has no cells")

    cells = []
    for entry in raw_cells:
        predictors = tuple(
            _predictor_from_dict(p) for p in entry["predictors"]
        ) if "predictors" in entry else shared_predictors
        if not predictors:
            raise ValidationError("no predictors configured for cell")
        m = int(entry.get("m", default_m))
        ratio = float(entry.get("split_ratio", default_ratio))
        scope = entry.get("apce_scope", default_scope)
        allow_long = bool(entry.get("allow_long", default_allow_long))
        seeds = entry.get("seeds", [base_seed])
        common = dict(m=m, split_ratio=ratio, predictors=predictors,
                      apce_scope=scope, allow_long=allow_long)
        if "use_propagation_subgraph" in entry:
            common["use_propagation_subgraph"] = bool(entry["use_propagation_subgraph"])
        for seed in seeds:
            if "cascades" in entry:
                path = entry["cascades"]
                if base_dir is not None:
                    path = os.path.join(base_dir, path)
                cells.append(ExperimentCell(
                    seed=int(seed),
                    cascades_path=path,
                    target_length=int(entry["target_length"]),
                    label=entry.get("label"),
                    **common,
                ))
            else:
                gspec = GraphSpec(
                    topology=str(entry["topology"]).upper(),
                    node_count=int(entry["node_count"]),
                    avg_degree=float(entry["avg_degree"]),
                    weight_exponent=float(entry.get("weight_exponent", 0.5)),
                )
                sim = SimConfig(
                    mechanism=str(entry["mechanism"]).upper(),
                    target_length=int(entry["target_length"]),
                    ic_prob=float(entry.get("ic_prob", 0.3)),
                    si_rate=float(entry.get("si_rate", 1.0)),
                    lt_threshold=_lt_threshold_from(entry.get("lt_threshold")),
                    max_attempts=int(entry.get("max_attempts", 100)),
                )
                cells.append(ExperimentCell(
                    seed=int(seed), graph_spec=gspec, sim_config=sim, **common,
                ))
    return ExperimentPlan(tuple(cells))


def sweep_to_files(plan: ExperimentPlan, csv_path, strict: bool = False,
                   workers: int = 1, plot: bool = False):
    """Run a sweep and write the results CSV (plus figures when plot=True)."""
    points, failures = run_sweep(plan, strict=strict, workers=workers)
    if not points:
        raise InsufficientDataError("sweep produced no data points")
    write_results_csv(points, csv_path)
    outputs = {"csv": str(csv_path)}
    if plot:
        prefix = str(csv_path)
        if prefix.endswith(".csv"):
            prefix = prefix[:-4]
        _, curves_path, svg_path = fit_and_plot(points, prefix)
        outputs["curves"] = curves_path
        outputs["svg"] = svg_path
    return points, failures, outputs
