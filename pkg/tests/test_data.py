import numpy as np
import pytest

from crfe.data import (
    Dataset,
    SyntheticSpec,
    apply_scaler,
    fit_scaler,
    generate_synthetic,
    impute_knn,
    load_csv,
    save_csv,
    save_synthetic,
    split,
    split_with_all_classes,
)
from crfe.exceptions import (
    EmptyRowSetError,
    InvalidSpecError,
    MissingFileError,
    MissingLabelColumnError,
    NotEnoughDonorsError,
    SingleClassError,
    TooFewSamplesError,
    UnparsableCellError,
)


def make_dataset(X, y, m=None):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    m = m if m is not None else int(y.max()) + 1
    return Dataset(
        X=X,
        y=y,
        feature_names=tuple(f"f{j}" for j in range(X.shape[1])),
        class_names=tuple(f"c{k}" for k in range(m)),
    )


# ---------------------------------------------------------------- loading


def test_load_csv_basic(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("a,b,label\n1.5,2.0,yes\n-1.0,0.25,no\n0.0,1.0,yes\n")
    d = load_csv(p, label_column="label")
    assert d.feature_names == ("a", "b")
    assert d.class_names == ("no", "yes")
    # class ids follow the sorted label strings
    assert d.y.tolist() == [1, 0, 1]
    assert d.X[0].tolist() == [1.5, 2.0]
    assert not d.has_missing()


def test_load_csv_label_column_anywhere(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("label,a,b\nx,1,2\ny,3,4\n")
    d = load_csv(p, label_column="label")
    assert d.feature_names == ("a", "b")
    assert d.X[1].tolist() == [3.0, 4.0]


def test_load_csv_missing_file():
    with pytest.raises(MissingFileError):
        load_csv("/nonexistent/nope.csv", label_column="label")


def test_load_csv_missing_label_column(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("a,b\n1,2\n")
    with pytest.raises(MissingLabelColumnError):
        load_csv(p, label_column="label")


def test_load_csv_unparsable_cell_reports_location(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("a,b,label\n1,2,x\n1,oops,y\n")
    with pytest.raises(UnparsableCellError) as ei:
        load_csv(p, label_column="label")
    assert ei.value.row == 1
    assert ei.value.col == 1
    assert ei.value.value == "oops"


def test_load_csv_single_class(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("a,label\n1,x\n2,x\n")
    with pytest.raises(SingleClassError):
        load_csv(p, label_column="label")


def test_load_csv_missing_token_and_drop_threshold(tmp_path):
    p = tmp_path / "d.csv"
    # column b is 50% missing: dropped at the default threshold, kept with None
    p.write_text("a,b,label\n1,,x\n2,5,y\n3,,x\n4,7,y\n")
    d = load_csv(p, label_column="label")
    assert d.feature_names == ("a",)
    assert not d.has_missing()
    full = load_csv(p, label_column="label", drop_missing_over=None)
    assert full.feature_names == ("a", "b")
    assert full.has_missing()
    assert full.missing_mask[:, 1].tolist() == [True, False, True, False]
    assert np.isnan(full.X[0, 1])


def test_csv_round_trip_exact(tmp_path):
    rng = np.random.default_rng(7)
    X = rng.standard_normal((11, 4))
    y = rng.integers(0, 3, size=11)
    y[:3] = [0, 1, 2]
    d = make_dataset(X, y, m=3)
    p = tmp_path / "rt.csv"
    save_csv(d, p)
    back = load_csv(p, label_column="label")
    assert back.feature_names == d.feature_names
    assert back.class_names == d.class_names
    assert back.y.tolist() == d.y.tolist()
    assert np.array_equal(back.X, d.X)  # repr round-trips doubles exactly


def test_csv_round_trip_missing_cells(tmp_path):
    X = np.array([[1.0, np.nan], [2.0, 5.0], [3.0, 6.0]])
    mask = np.isnan(X)
    d = Dataset(X=X, y=np.array([0, 1, 0]), feature_names=("a", "b"),
                class_names=("n", "p"), missing_mask=mask)
    p = tmp_path / "m.csv"
    save_csv(d, p)
    back = load_csv(p, label_column="label", drop_missing_over=None)
    assert back.missing_mask.tolist() == mask.tolist()


# ---------------------------------------------------------------- imputation


def test_impute_knn_two_neighbor_mean():
    # shared-feature distances from row 0: 1, 2, 10 -> donors rows 1 and 2
    X = np.array([
        [0.0, np.nan],
        [1.0, 2.0],
        [2.0, 4.0],
        [10.0, 100.0],
    ])
    d = Dataset(X=X, y=np.array([0, 1, 0, 1]), feature_names=("a", "b"),
                class_names=("n", "p"), missing_mask=np.isnan(X))
    out = impute_knn(d, k=2)
    assert out.X[0, 1] == 3.0
    assert out.missing_mask is None
    # observed cells untouched
    assert np.array_equal(out.X[1:], X[1:])


def test_impute_knn_idempotent_and_uses_original_values():
    rng = np.random.default_rng(3)
    for trial in range(20):
        X = rng.standard_normal((12, 5))
        holes = rng.random((12, 5)) < 0.15
        holes[:, 0] = False  # keep one column fully observed
        Xm = X.copy()
        Xm[holes] = np.nan
        d = Dataset(X=Xm, y=np.array([0, 1] * 6), feature_names=tuple("abcde"),
                    class_names=("n", "p"), missing_mask=holes)
        once = impute_knn(d, k=3)
        assert np.isfinite(once.X).all()
        twice = impute_knn(once, k=3)
        assert np.array_equal(once.X, twice.X)


def test_impute_knn_not_enough_donors():
    X = np.array([[1.0, np.nan], [2.0, np.nan], [3.0, 4.0]])
    d = Dataset(X=X, y=np.array([0, 1, 0]), feature_names=("a", "b"),
                class_names=("n", "p"), missing_mask=np.isnan(X))
    with pytest.raises(NotEnoughDonorsError):
        impute_knn(d, k=2)  # only row 2 can donate column b


def test_impute_noop_when_complete():
    d = make_dataset([[1.0, 2.0], [3.0, 4.0]], [0, 1])
    assert impute_knn(d) is d


# ---------------------------------------------------------------- scaling


def test_scaler_two_point_column():
    d = make_dataset([[1.0], [3.0]], [0, 1])
    s = fit_scaler(d, [0, 1])
    assert s.mean[0] == 2.0 and s.std[0] == 1.0
    out = apply_scaler(s, d)
    assert out.X[:, 0].tolist() == [-1.0, 1.0]


def test_scaler_constant_column_maps_to_zero():
    d = make_dataset([[5.0, 1.0], [5.0, 2.0]], [0, 1])
    s = fit_scaler(d, [0, 1])
    assert s.std[0] == 1.0
    out = apply_scaler(s, d)
    assert out.X[:, 0].tolist() == [0.0, 0.0]


def test_scaler_empty_rows_rejected():
    d = make_dataset([[1.0], [2.0]], [0, 1])
    with pytest.raises(EmptyRowSetError):
        fit_scaler(d, [])


def test_scaler_train_rows_standardized():
    rng = np.random.default_rng(11)
    for trial in range(10):
        X = rng.standard_normal((30, 6)) * rng.uniform(0.5, 4) + rng.uniform(-3, 3)
        d = make_dataset(X, np.arange(30) % 2)
        rows = rng.permutation(30)[:17]
        out = apply_scaler(fit_scaler(d, rows), d)
        assert np.allclose(out.X[rows].mean(axis=0), 0.0, atol=1e-12)
        assert np.allclose(out.X[rows].std(axis=0), 1.0, atol=1e-12)


# ---------------------------------------------------------------- splitting


def test_split_sizes_350():
    d = make_dataset(np.zeros((350, 2)) + np.arange(350)[:, None], np.arange(350) % 4)
    sp = split(d, seed=0)
    assert sp.test_idx.size == 88
    assert sp.train_idx.size == 131
    assert sp.calib_idx.size == 131


def test_split_sizes_odd_remainder():
    d = make_dataset(np.arange(20).reshape(10, 2), np.arange(10) % 2)
    sp = split(d, seed=1)
    # test gets round(2.5)=3 rows, train takes the extra one from the odd rest
    assert (sp.train_idx.size, sp.calib_idx.size, sp.test_idx.size) == (4, 3, 3)


def test_split_partitions_rows():
    d = make_dataset(np.arange(60).reshape(30, 2), np.arange(30) % 3)
    for seed in range(25):
        sp = split(d, seed)
        allidx = np.concatenate([sp.train_idx, sp.calib_idx, sp.test_idx])
        assert sorted(allidx.tolist()) == list(range(30))


def test_split_deterministic_and_seed_sensitive():
    d = make_dataset(np.arange(80).reshape(40, 2), np.arange(40) % 2)
    a = split(d, 5)
    b = split(d, 5)
    assert np.array_equal(a.train_idx, b.train_idx)
    assert np.array_equal(a.test_idx, b.test_idx)
    c = split(d, 6)
    assert not np.array_equal(a.train_idx, c.train_idx)


def test_split_too_few_samples():
    d = make_dataset(np.arange(14).reshape(7, 2), np.arange(7) % 2)
    with pytest.raises(TooFewSamplesError):
        split(d, 0)


def test_split_with_all_classes_retries():
    # class 1 has two rows; both must not land in the same non-train part
    y = np.zeros(20, dtype=int)
    y[[3, 17]] = 1
    d = make_dataset(np.arange(40).reshape(20, 2), y)
    bad = None
    for seed in range(300):
        sp = split(d, seed)
        if np.unique(d.y[sp.train_idx]).size < 2 or np.unique(d.y[sp.calib_idx]).size < 2:
            bad = seed
            break
    assert bad is not None
    with pytest.raises(TooFewSamplesError):
        split_with_all_classes(d, bad, max_tries=1)
    sp = split_with_all_classes(d, bad)
    assert np.unique(d.y[sp.train_idx]).size == 2
    assert np.unique(d.y[sp.calib_idx]).size == 2


# ---------------------------------------------------------------- synthesis


def test_synthetic_spec_validation():
    good = dict(n_samples=40, n_features=8, n_informative=3, n_redundant=1,
                n_classes=3, class_sep=1.0, flip_y=0.0, seed=0)
    SyntheticSpec(**good)
    for bad in (
        dict(good, n_informative=8),            # 8 + 1 > 8 columns
        dict(good, n_classes=1),
        dict(good, n_classes=9),                # > 2**3 vertices
        dict(good, flip_y=1.5),
        dict(good, class_sep=0.0),
        dict(good, n_redundant=-1),
    ):
        with pytest.raises(InvalidSpecError):
            SyntheticSpec(**bad)


def test_synthetic_shapes_and_determinism():
    spec = SyntheticSpec(n_samples=90, n_features=12, n_informative=4,
                         n_redundant=2, n_classes=3, class_sep=1.5,
                         flip_y=0.05, seed=42)
    d1, info1 = generate_synthetic(spec)
    d2, info2 = generate_synthetic(spec)
    assert d1.X.shape == (90, 12)
    assert np.array_equal(d1.X, d2.X)
    assert np.array_equal(d1.y, d2.y)
    assert np.array_equal(info1, info2)
    assert info1.size == 4
    d3, _ = generate_synthetic(SyntheticSpec(n_samples=90, n_features=12,
                                             n_informative=4, n_redundant=2,
                                             n_classes=3, class_sep=1.5,
                                             flip_y=0.05, seed=43))
    assert not np.array_equal(d1.X, d3.X)


def test_synthetic_informative_columns_carry_signal():
    # informative columns separate classes, noise columns do not
    spec = SyntheticSpec(n_samples=600, n_features=10, n_informative=3,
                         n_redundant=0, n_classes=2, class_sep=3.0,
                         flip_y=0.0, seed=9)
    d, info = generate_synthetic(spec)
    gaps = np.abs(d.X[d.y == 0].mean(axis=0) - d.X[d.y == 1].mean(axis=0))
    info_set = set(info.tolist())
    noise = [j for j in range(10) if j not in info_set]
    # vertices may agree on a coordinate, but at least one must differ widely
    assert gaps[info].max() > 2.0
    assert gaps[noise].max() < 0.5


def test_synthetic_label_flips_bounded():
    spec = SyntheticSpec(n_samples=200, n_features=6, n_informative=3,
                         n_redundant=0, n_classes=4, class_sep=2.0,
                         flip_y=0.1, seed=5)
    d, _ = generate_synthetic(spec)
    clean = np.arange(200) % 4
    assert (d.y != clean).sum() <= round(0.1 * 200)


def test_save_synthetic_sidecar(tmp_path):
    spec = SyntheticSpec(n_samples=40, n_features=6, n_informative=2,
                         n_redundant=1, n_classes=2, class_sep=2.0,
                         flip_y=0.0, seed=3)
    p = tmp_path / "synth.csv"
    d, info = save_synthetic(spec, p)
    assert p.exists()
    meta = (tmp_path / "synth.meta.json").read_text()
    import json
    parsed = json.loads(meta)
    assert parsed["informative_indices"] == [int(j) for j in info]
    assert parsed["spec"]["seed"] == 3
    back = load_csv(p, label_column="label")
    assert np.array_equal(back.X, d.X)
