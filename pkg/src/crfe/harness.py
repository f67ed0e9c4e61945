"""Experiment orchestration: seeded repeats, both selectors, reports.

The protocol per repeat: derive a seed from the master seed, draw one
train/calibration/test split shared by every selector, standardize with
train-row statistics, run each selector down through the requested subset
sizes, and score conformal set predictions plus hard-label metrics at
every size. Aggregation, consistency indices, the automatic-stop
benchmark and all file outputs (CSV, trace JSON, SVG) hang off the same
table so a whole run is a pure function of its config.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field, replace

import numpy as np

from .classifier import TrainConfig, decision_matrix, train_ova
from .conformal import calibrate, conformal_predict
from .consistency import SubsetFamily, jaccard_multi, kuncheva, weighted_consistency
from .data import (
    Dataset,
    SyntheticSpec,
    apply_scaler,
    fit_scaler,
    generate_synthetic,
    impute_knn,
    load_csv,
    split_with_all_classes,
)
from .exceptions import ConfigError, DegenerateLabelsError
from .metrics import PointMetricsReport, SetMetricsReport, point_metrics, point_predict, set_metrics
from .plots import save_plot
from .selection import (
    BetaCriterion,
    FixedSize,
    SelectionTrace,
    run_crfe,
    run_rfe,
    trace_to_json,
)

METRIC_COLUMNS = (
    "coverage",
    "inefficiency",
    "certainty",
    "uncertainty",
    "mistrust",
    "accuracy",
    "macro_precision",
    "macro_recall",
    "macro_f1",
)

SELECTORS = ("crfe", "rfe")


@dataclass(frozen=True)
class StoppingParams:
    """Automatic-stop benchmark settings."""

    sigma: float = 5.0
    psi: int = 10
    warmup: int = 5
    repeats: int = 50

    def __post_init__(self):
        if self.repeats < 1:
            raise ConfigError("stopping repeats must be >= 1")


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a full experiment run depends on.

    Exactly one dataset source must be set: a CSV path with its label
    column, or a synthetic generator spec.
    """

    dataset_csv: str | None = None
    label_column: str | None = None
    synthetic: SyntheticSpec | None = None
    epsilon: float = 0.1
    lam: float = 0.5
    train: TrainConfig = field(default_factory=TrainConfig)
    repeats: int = 20
    master_seed: int = 0
    selectors: tuple[str, ...] = SELECTORS
    sizes: tuple[int, ...] | None = None
    stopping: StoppingParams = field(default_factory=StoppingParams)

    def __post_init__(self):
        has_csv = self.dataset_csv is not None
        if has_csv == (self.synthetic is not None):
            raise ConfigError("set exactly one of dataset_csv and synthetic")
        if has_csv and not self.label_column:
            raise ConfigError("a CSV dataset needs label_column")
        if not 0.0 < self.epsilon < 1.0:
            raise ConfigError("epsilon must lie in (0, 1)")
        if not 0.0 <= self.lam <= 1.0:
            raise ConfigError("lambda must lie in [0, 1]")
        if self.repeats < 1:
            raise ConfigError("repeats must be >= 1")
        object.__setattr__(self, "selectors", tuple(self.selectors))
        if not self.selectors or any(s not in SELECTORS for s in self.selectors):
            raise ConfigError(f"selectors must be non-empty, drawn from {SELECTORS}")
        if self.sizes is not None:
            sizes = tuple(int(s) for s in self.sizes)
            if any(b >= a for a, b in zip(sizes, sizes[1:])) or not sizes:
                raise ConfigError("sizes must be non-empty and strictly decreasing")
            if sizes[-1] < 1:
                raise ConfigError("sizes must stay >= 1")
            object.__setattr__(self, "sizes", sizes)


def config_from_dict(data: dict) -> ExperimentConfig:
    """Build a config from the JSON wire format (unknown keys rejected)."""
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    known = {"dataset", "epsilon", "lambda", "train", "repeats", "master_seed",
             "selectors", "sizes", "stopping"}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if "dataset" not in data:
        raise ConfigError("config needs a dataset entry")
    ds = data["dataset"]
    kwargs: dict = {}
    try:
        if "synthetic" in ds:
            kwargs["synthetic"] = SyntheticSpec(**ds["synthetic"])
        else:
            kwargs["dataset_csv"] = ds["csv"]
            kwargs["label_column"] = ds.get("label", "label")
    except (TypeError, KeyError) as e:
        raise ConfigError(f"bad dataset entry: {e}") from None
    if "epsilon" in data:
        kwargs["epsilon"] = float(data["epsilon"])
    if "lambda" in data:
        kwargs["lam"] = float(data["lambda"])
    if "train" in data:
        try:
            kwargs["train"] = TrainConfig(**data["train"])
        except TypeError as e:
            raise ConfigError(f"bad train entry: {e}") from None
    if "repeats" in data:
        kwargs["repeats"] = int(data["repeats"])
    if "master_seed" in data:
        kwargs["master_seed"] = int(data["master_seed"])
    if "selectors" in data:
        kwargs["selectors"] = tuple(data["selectors"])
    if "sizes" in data:
        kwargs["sizes"] = tuple(data["sizes"])
    if "stopping" in data:
        try:
            kwargs["stopping"] = StoppingParams(**data["stopping"])
        except TypeError as e:
            raise ConfigError(f"bad stopping entry: {e}") from None
    return ExperimentConfig(**kwargs)


def config_from_json(path) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"no such config file: {path}") from None
    except json.JSONDecodeError as e:
        raise ConfigError(f"config is not valid JSON: {e}") from None
    return config_from_dict(data)


def load_dataset(cfg: ExperimentConfig) -> tuple[Dataset, str]:
    """Materialize the configured dataset (imputing any missing cells)."""
    if cfg.synthetic is not None:
        d, _ = generate_synthetic(cfg.synthetic)
        return d, "synthetic"
    d = load_csv(cfg.dataset_csv, label_column=cfg.label_column)
    if d.has_missing():
        d = impute_knn(d)
    name = os.path.splitext(os.path.basename(cfg.dataset_csv))[0]
    return d, name


# --------------------------------------------------------------- comparison


@dataclass(frozen=True)
class ResultRow:
    dataset: str
    method: str
    subset_size: int
    seed: int
    sets: SetMetricsReport
    points: PointMetricsReport

    def metric(self, name: str) -> float:
        if hasattr(self.sets, name):
            return getattr(self.sets, name)
        return getattr(self.points, name)


@dataclass(frozen=True, eq=False)
class ResultsTable:
    """Per-seed rows plus everything needed to aggregate and re-emit."""

    dataset: str
    feature_names: tuple[str, ...]
    class_names: tuple[str, ...]
    sizes: tuple[int, ...]
    methods: tuple[str, ...]
    seeds: tuple[int, ...]
    rows: tuple[ResultRow, ...]
    traces: dict

    def aggregates(self) -> list[dict]:
        """One entry per (method, size): exact mean/std of its seed rows."""
        out = []
        for method in self.methods:
            for size in self.sizes:
                group = [r for r in self.rows
                         if r.method == method and r.subset_size == size]
                entry = {"method": method, "subset_size": size, "n": len(group)}
                for col in METRIC_COLUMNS:
                    vals = np.array([r.metric(col) for r in group])
                    entry[col] = float(vals.mean())
                    entry[col + "_std"] = float(vals.std())
                out.append(entry)
        return out

    def to_csv(self, path) -> None:
        header = ["dataset", "method", "subset_size", "seed"]
        header += list(METRIC_COLUMNS)
        header += [c + "_std" for c in METRIC_COLUMNS]
        with open(path, "w", newline="", encoding="utf-8") as fh:
            fh.write(",".join(header) + "\n")
            for r in self.rows:
                cells = [r.dataset, r.method, str(r.subset_size), str(r.seed)]
                cells += [repr(float(r.metric(c))) for c in METRIC_COLUMNS]
                cells += [""] * len(METRIC_COLUMNS)
                fh.write(",".join(cells) + "\n")
            for a in self.aggregates():
                cells = [self.dataset, a["method"], str(a["subset_size"]), "aggregate"]
                cells += [repr(a[c]) for c in METRIC_COLUMNS]
                cells += [repr(a[c + "_std"]) for c in METRIC_COLUMNS]
                fh.write(",".join(cells) + "\n")


def _evaluate(ms, X_cal, y_cal, X_test, y_test, epsilon, n_classes):
    cols = list(ms.active_features)
    rec = calibrate(ms, X_cal[:, cols], y_cal)
    _, mask = conformal_predict(ms, rec, X_test[:, cols], epsilon)
    D = decision_matrix(ms, X_test[:, cols])
    return (
        set_metrics(mask, y_test),
        point_metrics(point_predict(D), y_test, n_classes),
    )


def run_comparison(cfg: ExperimentConfig) -> ResultsTable:
    """Both selectors over every requested size, one shared split per seed."""
    d, name = load_dataset(cfg)
    l = d.n_features
    sizes = cfg.sizes if cfg.sizes is not None else tuple(range(l - 1, 0, -1))
    if sizes[0] > l:
        raise ConfigError(f"sizes start at {sizes[0]} but the data has {l} features")
    size_set = set(sizes)
    rows: list[ResultRow] = []
    traces: dict = {}
    seeds = tuple(cfg.master_seed + r for r in range(cfg.repeats))
    for r, seed in enumerate(seeds):
        sp = split_with_all_classes(d, seed)
        ds = apply_scaler(fit_scaler(d, sp.train_idx), d)
        X_tr, y_tr = ds.X[sp.train_idx], ds.y[sp.train_idx]
        X_cal, y_cal = ds.X[sp.calib_idx], ds.y[sp.calib_idx]
        X_te, y_te = ds.X[sp.test_idx], ds.y[sp.test_idx]
        tcfg = replace(cfg.train, seed=cfg.train.seed + r)
        for method in cfg.selectors:
            collected: dict[int, tuple] = {}

            def observer(_it, active, ms, _crit):
                if len(active) in size_set:
                    collected[len(active)] = _evaluate(
                        ms, X_cal, y_cal, X_te, y_te, cfg.epsilon, d.n_classes
                    )

            runner = run_crfe if method == "crfe" else run_rfe
            trace = runner(
                X_tr, y_tr, X_cal, y_cal, d.n_classes,
                FixedSize(sizes[-1]), tcfg, cfg.lam, observer=observer,
            )
            traces[(method, seed)] = trace
            for s in sizes:
                sm, pm = collected[s]
                rows.append(ResultRow(name, method, s, seed, sm, pm))
    return ResultsTable(
        dataset=name,
        feature_names=d.feature_names,
        class_names=d.class_names,
        sizes=sizes,
        methods=tuple(cfg.selectors),
        seeds=seeds,
        rows=tuple(rows),
        traces=traces,
    )


# -------------------------------------------------------------- consistency


def subsets_by_size(trace: SelectionTrace, n_features: int) -> dict[int, frozenset]:
    """Active subset after each removal, keyed by its size."""
    active = set(range(n_features))
    out = {n_features: frozenset(active)}
    for step in trace.steps:
        if step.removed_feature is not None:
            active.discard(step.removed_feature)
            out[step.remaining_count] = frozenset(active)
    return out


def consistency_report(table: ResultsTable) -> list[dict]:
    """Per-method stability across seeds, plus cross-method agreement.

    Within a method, the subsets selected at one size across all seeds
    form a family scored with the multi-set Jaccard index, the weighted
    index, and mean/std pairwise chance-corrected agreement. When both
    selectors ran, subsets from the same (seed, size) are also compared
    across methods (mean/std of pairwise Jaccard and of the
    chance-corrected index over seeds).
    """
    l = len(table.feature_names)
    per_method = {
        m: {seed: subsets_by_size(table.traces[(m, seed)], l) for seed in table.seeds}
        for m in table.methods
    }
    rows: list[dict] = []
    for method in table.methods:
        for size in table.sizes:
            fam = SubsetFamily(
                subsets=tuple(per_method[method][seed][size] for seed in table.seeds)
            )
            row = {
                "method": method,
                "subset_size": size,
                "i_j": jaccard_multi(fam),
                "i_w": weighted_consistency(fam),
            }
            if len(table.seeds) >= 2 and size < l:
                pair_k = [
                    kuncheva(a, b, l)
                    for i, a in enumerate(fam.subsets)
                    for b in fam.subsets[i + 1:]
                ]
                row["kuncheva_mean"] = float(np.mean(pair_k))
                row["kuncheva_std"] = float(np.std(pair_k))
            else:
                row["kuncheva_mean"] = math.nan
                row["kuncheva_std"] = math.nan
            rows.append(row)
    if set(table.methods) >= {"crfe", "rfe"}:
        for size in table.sizes:
            jac, kun = [], []
            for seed in table.seeds:
                a = per_method["crfe"][seed][size]
                b = per_method["rfe"][seed][size]
                jac.append(jaccard_multi(SubsetFamily(subsets=(a, b))))
                if size < l:
                    kun.append(kuncheva(a, b, l))
            rows.append({
                "method": "crfe_vs_rfe",
                "subset_size": size,
                "jaccard_mean": float(np.mean(jac)),
                "jaccard_std": float(np.std(jac)),
                "kuncheva_mean": float(np.mean(kun)) if kun else math.nan,
                "kuncheva_std": float(np.std(kun)) if kun else math.nan,
            })
    return rows


def run_consistency(cfg: ExperimentConfig, table: ResultsTable | None = None) -> list[dict]:
    return consistency_report(table if table is not None else run_comparison(cfg))


# ---------------------------------------------------------------- stopping


def _cv_accuracy(X, y, n_classes, tcfg, folds: int = 5) -> float:
    """Mean held-out argmax accuracy over contiguous folds; NaN-safe."""
    n = X.shape[0]
    parts = np.array_split(np.arange(n), folds)
    accs = []
    for hold in parts:
        train_rows = np.setdiff1d(np.arange(n), hold)
        try:
            ms = train_ova(X[train_rows], y[train_rows], n_classes, tcfg)
        except DegenerateLabelsError:
            continue
        pred = point_predict(decision_matrix(ms, X[hold]))
        accs.append(float((pred == y[hold]).mean()))
    return float(np.mean(accs)) if accs else -1.0


def run_stopping_benchmark(cfg: ExperimentConfig):
    """Automatic-stop comparison: beta criterion vs cross-validated baseline.

    Per repeat, one shared split. The conformal selector stops by its own
    criterion; the baseline runs its full elimination path and keeps the
    size with the best 5-fold training accuracy (ties to the larger
    size). Both final subsets are scored on the test split at the
    configured epsilon.

    Returns
    -------
    summary : list of dict, one row per method with mean/std of the
        selected size, inefficiency and certainty.
    frequencies : list of dict, per (method, feature) selection counts.
    per_run : list of dict, raw (method, seed, size, metrics) records.
    """
    d, name = load_dataset(cfg)
    l, m = d.n_features, d.n_classes
    counts = {method: np.zeros(l, dtype=int) for method in cfg.selectors}
    per_run: list[dict] = []
    for r in range(cfg.stopping.repeats):
        seed = cfg.master_seed + r
        sp = split_with_all_classes(d, seed)
        ds = apply_scaler(fit_scaler(d, sp.train_idx), d)
        X_tr, y_tr = ds.X[sp.train_idx], ds.y[sp.train_idx]
        X_cal, y_cal = ds.X[sp.calib_idx], ds.y[sp.calib_idx]
        X_te, y_te = ds.X[sp.test_idx], ds.y[sp.test_idx]
        tcfg = replace(cfg.train, seed=cfg.train.seed + r)
        chosen: dict[str, tuple[int, ...]] = {}
        if "crfe" in cfg.selectors:
            tr = run_crfe(
                X_tr, y_tr, X_cal, y_cal, m,
                BetaCriterion(cfg.stopping.sigma, cfg.stopping.psi, cfg.stopping.warmup),
                tcfg, cfg.lam,
            )
            chosen["crfe"] = tr.selected
        if "rfe" in cfg.selectors:
            snapshots: dict[int, tuple[int, ...]] = {}

            def observer(_it, active, _ms, _crit):
                snapshots[len(active)] = active

            run_rfe(X_tr, y_tr, X_cal, y_cal, m, FixedSize(1), tcfg, cfg.lam,
                    observer=observer)
            best_size, best_acc = None, -math.inf
            for size in sorted(snapshots, reverse=True):
                cols = list(snapshots[size])
                acc = _cv_accuracy(X_tr[:, cols], y_tr, m, tcfg)
                if acc > best_acc:
                    best_size, best_acc = size, acc
            chosen["rfe"] = snapshots[best_size]
        for method in cfg.selectors:
            subset = chosen[method]
            cols = list(subset)
            ms = train_ova(X_tr[:, cols], y_tr, m, tcfg, cfg.lam, active_features=cols)
            sm, _pm = _evaluate(ms, X_cal, y_cal, X_te, y_te, cfg.epsilon, m)
            counts[method][cols] += 1
            per_run.append({
                "method": method,
                "seed": seed,
                "size": len(subset),
                "inefficiency": sm.inefficiency,
                "certainty": sm.certainty,
            })
    summary = []
    for method in cfg.selectors:
        recs = [p for p in per_run if p["method"] == method]
        entry = {"dataset": name, "method": method, "n": len(recs)}
        for col in ("size", "inefficiency", "certainty"):
            vals = np.array([float(p[col]) for p in recs])
            entry["mean_" + col] = float(vals.mean())
            entry["std_" + col] = float(vals.std())
        summary.append(entry)
    frequencies = [
        {
            "dataset": name,
            "method": method,
            "feature_index": j,
            "feature_name": d.feature_names[j],
            "count": int(counts[method][j]),
        }
        for method in cfg.selectors
        for j in range(l)
    ]
    return summary, frequencies, per_run


# ------------------------------------------------------------------ output


def _csv_cell(v) -> str:
    if isinstance(v, float):
        if math.isnan(v):
            return ""
        return repr(v)
    return str(v)


CONSISTENCY_COLUMNS = (
    "method", "subset_size", "i_j", "i_w",
    "kuncheva_mean", "kuncheva_std", "jaccard_mean", "jaccard_std",
)


def write_consistency_csv(rows: list[dict], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(",".join(CONSISTENCY_COLUMNS) + "\n")
        for row in rows:
            fh.write(",".join(
                _csv_cell(row[c]) if c in row else "" for c in CONSISTENCY_COLUMNS
            ) + "\n")


def write_stopping_csv(summary: list[dict], path) -> None:
    cols = ("dataset", "method", "n", "mean_size", "std_size",
            "mean_inefficiency", "std_inefficiency", "mean_certainty", "std_certainty")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(",".join(cols) + "\n")
        for row in summary:
            fh.write(",".join(_csv_cell(row[c]) for c in cols) + "\n")


def write_frequencies_csv(frequencies: list[dict], path) -> None:
    cols = ("dataset", "method", "feature_index", "feature_name", "count")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(",".join(cols) + "\n")
        for row in frequencies:
            fh.write(",".join(_csv_cell(row[c]) for c in cols) + "\n")


def emit_outputs(
    table: ResultsTable,
    consistency_rows: list[dict],
    stopping_summary: list[dict],
    frequencies: list[dict],
    out_dir,
) -> list[str]:
    """Write the four CSV reports, per-run trace JSONs and metric plots."""
    os.makedirs(out_dir, exist_ok=True)
    written = []

    def emit(name, writer):
        path = os.path.join(out_dir, name)
        writer(path)
        written.append(path)

    emit("results.csv", table.to_csv)
    emit("consistency.csv", lambda p: write_consistency_csv(consistency_rows, p))
    emit("stopping.csv", lambda p: write_stopping_csv(stopping_summary, p))
    emit("frequencies.csv", lambda p: write_frequencies_csv(frequencies, p))
    for (method, seed), trace in sorted(table.traces.items()):
        path = os.path.join(out_dir, f"trace_{method}_{seed}.json")
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(trace_to_json(trace, table.feature_names), fh, indent=2)
            fh.write("\n")
        written.append(path)
    aggs = table.aggregates()
    xs = np.array(table.sizes, dtype=float)
    for method in table.methods:
        rows = {a["subset_size"]: a for a in aggs if a["method"] == method}
        for col in METRIC_COLUMNS:
            mean = np.array([rows[s][col] for s in table.sizes])
            std = np.array([rows[s][col + "_std"] for s in table.sizes])
            path = os.path.join(out_dir, f"plot_{col}_{method}.svg")
            save_plot(
                path, xs, mean, std,
                title=f"{col} vs subset size ({method})",
                x_label="subset size", y_label=col,
            )
            written.append(path)
    return written


def run_all(cfg: ExperimentConfig, out_dir) -> list[str]:
    """Full pipeline behind the bench subcommand."""
    table = run_comparison(cfg)
    consistency_rows = consistency_report(table)
    stopping_summary, frequencies, _ = run_stopping_benchmark(cfg)
    return emit_outputs(table, consistency_rows, stopping_summary, frequencies, out_dir)
