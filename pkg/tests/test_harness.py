import csv
import json
import math
import os

import numpy as np
import pytest

from crfe.classifier import TrainConfig
from crfe.data import SyntheticSpec
from crfe.exceptions import ConfigError
from crfe.harness import (
    METRIC_COLUMNS,
    ExperimentConfig,
    StoppingParams,
    config_from_dict,
    consistency_report,
    emit_outputs,
    run_comparison,
    run_stopping_benchmark,
    subsets_by_size,
)

TINY = SyntheticSpec(n_samples=120, n_features=8, n_informative=3, n_redundant=2,
                     n_classes=3, class_sep=1.5, flip_y=0.02, seed=7)
FAST_TRAIN = TrainConfig(epochs=40, batch_size=16)


def tiny_config(**over):
    base = dict(synthetic=TINY, repeats=2, master_seed=3, train=FAST_TRAIN,
                stopping=StoppingParams(repeats=2))
    base.update(over)
    return ExperimentConfig(**base)


@pytest.fixture(scope="module")
def tiny_table():
    return run_comparison(tiny_config())


# ------------------------------------------------------------------- config


def test_config_requires_exactly_one_source():
    with pytest.raises(ConfigError):
        ExperimentConfig()
    with pytest.raises(ConfigError):
        ExperimentConfig(dataset_csv="a.csv", label_column="y", synthetic=TINY)
    with pytest.raises(ConfigError):
        ExperimentConfig(dataset_csv="a.csv")  # label missing


def test_config_validates_ranges():
    with pytest.raises(ConfigError):
        tiny_config(epsilon=0.0)
    with pytest.raises(ConfigError):
        tiny_config(epsilon=1.0)
    with pytest.raises(ConfigError):
        tiny_config(lam=1.5)
    with pytest.raises(ConfigError):
        tiny_config(repeats=0)
    with pytest.raises(ConfigError):
        tiny_config(selectors=("svm",))
    with pytest.raises(ConfigError):
        tiny_config(sizes=(3, 5))  # must strictly decrease
    with pytest.raises(ConfigError):
        tiny_config(sizes=(2, 1, 0))


def test_config_from_dict_wire_names():
    cfg = config_from_dict({
        "dataset": {"synthetic": {"n_samples": 120, "n_features": 8,
                                  "n_informative": 3, "n_redundant": 2,
                                  "n_classes": 3, "class_sep": 1.5,
                                  "flip_y": 0.02, "seed": 7}},
        "epsilon": 0.2,
        "lambda": 0.7,
        "train": {"epochs": 40, "batch_size": 16},
        "repeats": 4,
        "master_seed": 9,
        "selectors": ["crfe"],
        "sizes": [5, 3, 1],
        "stopping": {"sigma": 4.0, "repeats": 6},
    })
    assert cfg.epsilon == 0.2 and cfg.lam == 0.7
    assert cfg.train.epochs == 40 and cfg.repeats == 4
    assert cfg.selectors == ("crfe",) and cfg.sizes == (5, 3, 1)
    assert cfg.stopping.sigma == 4.0 and cfg.stopping.repeats == 6


def test_config_from_dict_rejects_unknown_keys():
    with pytest.raises(ConfigError):
        config_from_dict({"dataset": {"csv": "x.csv"}, "bogus": 1})
    with pytest.raises(ConfigError):
        config_from_dict({"dataset": {"synthetic": {"n_samples": 10}}})
    with pytest.raises(ConfigError):
        config_from_dict([1, 2])


# --------------------------------------------------------------- comparison


def test_row_arithmetic(tiny_table):
    # 2 methods x 7 sizes x 2 seeds, plus one aggregate per (method, size)
    assert len(tiny_table.rows) == 2 * 7 * 2
    assert len(tiny_table.aggregates()) == 2 * 7
    assert tiny_table.sizes == tuple(range(7, 0, -1))


def test_same_master_seed_identical_tables(tmp_path, tiny_table):
    again = run_comparison(tiny_config())
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    tiny_table.to_csv(p1)
    again.to_csv(p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_aggregates_recompute_exactly(tiny_table):
    for agg in tiny_table.aggregates():
        group = [r for r in tiny_table.rows
                 if r.method == agg["method"] and r.subset_size == agg["subset_size"]]
        assert agg["n"] == len(group) == 2
        for col in METRIC_COLUMNS:
            vals = np.array([r.metric(col) for r in group])
            assert agg[col] == float(vals.mean())
            assert agg[col + "_std"] == float(vals.std())


def test_results_csv_round_trip(tmp_path, tiny_table):
    path = tmp_path / "results.csv"
    tiny_table.to_csv(path)
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    seed_rows = [r for r in rows if r["seed"] != "aggregate"]
    agg_rows = [r for r in rows if r["seed"] == "aggregate"]
    assert len(seed_rows) == len(tiny_table.rows)
    assert len(agg_rows) == len(tiny_table.aggregates())
    by_key = {(r.method, r.subset_size, r.seed): r for r in tiny_table.rows}
    for r in seed_rows:
        orig = by_key[(r["method"], int(r["subset_size"]), int(r["seed"]))]
        for col in METRIC_COLUMNS:
            assert float(r[col]) == orig.metric(col)
        assert r["coverage_std"] == ""  # std cells only on aggregates


def test_custom_sizes_subset(tmp_path):
    table = run_comparison(tiny_config(sizes=(6, 4, 2), selectors=("crfe",)))
    assert {r.subset_size for r in table.rows} == {6, 4, 2}
    assert len(table.rows) == 3 * 2


def test_bad_sizes_for_data():
    with pytest.raises(ConfigError):
        run_comparison(tiny_config(sizes=(9, 2)))  # only 8 features


# -------------------------------------------------------------- consistency


def test_subsets_by_size_walks_trace(tiny_table):
    trace = tiny_table.traces[("crfe", 3)]
    subs = subsets_by_size(trace, 8)
    assert subs[8] == frozenset(range(8))
    for size in range(1, 8):
        assert len(subs[size]) == size
        assert subs[size] < subs[size + 1]
    assert subs[trace.n_selected] == frozenset(trace.selected)


def test_consistency_report_shape(tiny_table):
    rows = consistency_report(tiny_table)
    within = [r for r in rows if r["method"] in ("crfe", "rfe")]
    cross = [r for r in rows if r["method"] == "crfe_vs_rfe"]
    assert len(within) == 2 * 7 and len(cross) == 7
    for r in within:
        assert 0.0 <= r["i_j"] <= 1.0 and 0.0 <= r["i_w"] <= 1.0
        assert -1.0 <= r["kuncheva_mean"] <= 1.0
    for r in cross:
        assert -1.0 <= r["jaccard_mean"] <= 1.0


def test_two_repeats_weighted_collapses_to_jaccard(tiny_table):
    # with n=2 subsets the weighted index equals plain Jaccard at every size
    for r in consistency_report(tiny_table):
        if r["method"] in ("crfe", "rfe"):
            assert r["i_w"] == pytest.approx(r["i_j"], abs=1e-12)


# ----------------------------------------------------------------- stopping


def test_stopping_benchmark_shapes():
    summary, freqs, per_run = run_stopping_benchmark(tiny_config())
    assert [s["method"] for s in summary] == ["crfe", "rfe"]
    for s in summary:
        assert s["n"] == 2
        assert 1 <= s["mean_size"] <= 8
        assert s["std_size"] >= 0.0
    assert len(freqs) == 2 * 8
    for f in freqs:
        assert 0 <= f["count"] <= 2
    # every run keeps at least one feature, never all-plus-one
    assert all(1 <= p["size"] <= 8 for p in per_run)


def test_stopping_benchmark_crfe_only():
    summary, freqs, _ = run_stopping_benchmark(tiny_config(selectors=("crfe",)))
    assert [s["method"] for s in summary] == ["crfe"]
    assert len(freqs) == 8


# ------------------------------------------------------------------- output


def test_emit_outputs_files_and_determinism(tmp_path, tiny_table):
    rows = consistency_report(tiny_table)
    summary, freqs, _ = run_stopping_benchmark(tiny_config())
    out = tmp_path / "out"
    written = emit_outputs(tiny_table, rows, summary, freqs, out)
    names = sorted(os.path.basename(p) for p in written)
    for req in ("results.csv", "consistency.csv", "stopping.csv", "frequencies.csv"):
        assert req in names
    traces = [n for n in names if n.startswith("trace_")]
    assert len(traces) == 2 * 2  # methods x seeds
    plots = [n for n in names if n.endswith(".svg")]
    assert len(plots) == len(METRIC_COLUMNS) * 2  # metrics x methods
    before = {n: (out / n).read_bytes() for n in names}
    emit_outputs(tiny_table, rows, summary, freqs, out)
    assert {n: (out / n).read_bytes() for n in names} == before


def test_emitted_csvs_parse_back(tmp_path, tiny_table):
    rows = consistency_report(tiny_table)
    summary, freqs, _ = run_stopping_benchmark(tiny_config())
    emit_outputs(tiny_table, rows, summary, freqs, tmp_path)
    with open(tmp_path / "consistency.csv", newline="") as fh:
        back = list(csv.DictReader(fh))
    assert len(back) == len(rows)
    for orig, got in zip(rows, back):
        assert got["method"] == orig["method"]
        if got["i_j"]:
            assert float(got["i_j"]) == orig["i_j"]
    with open(tmp_path / "stopping.csv", newline="") as fh:
        back = list(csv.DictReader(fh))
    assert [r["method"] for r in back] == ["crfe", "rfe"]
    assert all(float(r["mean_size"]) > 0 for r in back)
    with open(tmp_path / "frequencies.csv", newline="") as fh:
        back = list(csv.DictReader(fh))
    assert sorted({r["feature_name"] for r in back}) == sorted(
        tiny_table.feature_names
    )


def test_trace_json_uses_feature_names(tmp_path, tiny_table):
    summary, freqs, _ = run_stopping_benchmark(tiny_config())
    emit_outputs(tiny_table, consistency_report(tiny_table), summary, freqs, tmp_path)
    with open(tmp_path / "trace_crfe_3.json") as fh:
        doc = json.load(fh)
    assert doc["method"] == "crfe"
    assert set(doc["final_subset"]) <= set(tiny_table.feature_names)
