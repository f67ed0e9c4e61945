"""Dataset container, CSV ingestion, preprocessing and seeded splitting.

Everything here is pure given its inputs and seed: datasets are treated as
immutable after construction, and every stochastic operation takes an
explicit seed that feeds numpy's PCG64 generator.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, asdict

import numpy as np

from .exceptions import (
    EmptyRowSetError,
    InvalidSpecError,
    MissingFileError,
    MissingLabelColumnError,
    NotEnoughDonorsError,
    SingleClassError,
    TooFewSamplesError,
    UnparsableCellError,
)

TEST_FRACTION = 0.25
DEFAULT_IMPUTE_NEIGHBORS = 5
DEFAULT_MISSING_DROP_THRESHOLD = 0.25


@dataclass(frozen=True, eq=False)
class Dataset:
    """A dense feature matrix with integer class labels.

    Attributes
    ----------
    X : ndarray of shape (n_samples, n_features)
        Feature values; missing entries hold NaN and are flagged in
        ``missing_mask``.
    y : ndarray of shape (n_samples,)
        Class ids in ``[0, n_classes)``; every class occurs at least once.
    feature_names : tuple of str
        One name per column of ``X``.
    class_names : tuple of str
        One name per class id.
    missing_mask : ndarray of bool or None
        True where the original cell was missing; None once fully observed.
    """

    X: np.ndarray
    y: np.ndarray
    feature_names: tuple[str, ...]
    class_names: tuple[str, ...]
    missing_mask: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "X", np.asarray(self.X, dtype=float))
        object.__setattr__(self, "y", np.asarray(self.y, dtype=int))
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        object.__setattr__(self, "class_names", tuple(self.class_names))
        if self.X.ndim != 2:
            raise ValueError("X must be 2-dimensional")
        if self.X.shape[0] != self.y.shape[0]:
            raise ValueError("X row count does not match y length")
        if len(self.feature_names) != self.X.shape[1]:
            raise ValueError("feature_names length does not match X columns")
        m = len(self.class_names)
        if m < 2:
            raise SingleClassError("a dataset needs at least two classes")
        counts = np.bincount(self.y, minlength=m)
        if self.y.size and (self.y.min() < 0 or self.y.max() >= m):
            raise ValueError("class ids out of range")
        if (counts == 0).any():
            missing = [self.class_names[i] for i in np.flatnonzero(counts == 0)]
            raise ValueError(f"classes never observed: {missing}")
        if self.missing_mask is not None:
            mask = np.asarray(self.missing_mask, dtype=bool)
            if mask.shape != self.X.shape:
                raise ValueError("missing_mask shape does not match X")
            object.__setattr__(self, "missing_mask", mask)

    @property
    def n_samples(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    def has_missing(self) -> bool:
        return self.missing_mask is not None and bool(self.missing_mask.any())


@dataclass(frozen=True, eq=False)
class DataSplit:
    """Disjoint train/calibration/test row indices covering a dataset."""

    train_idx: np.ndarray
    calib_idx: np.ndarray
    test_idx: np.ndarray

    def __post_init__(self):
        for name in ("train_idx", "calib_idx", "test_idx"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=int))


@dataclass(frozen=True, eq=False)
class Scaler:
    """Per-feature location/scale estimated on training rows only.

    Standard deviations are strictly positive: constant columns store 1 so
    their transformed values are exactly 0.
    """

    mean: np.ndarray
    std: np.ndarray


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters of the seeded synthetic multiclass generator."""

    n_samples: int
    n_features: int
    n_informative: int
    n_redundant: int
    n_classes: int
    class_sep: float
    flip_y: float
    seed: int

    def __post_init__(self):
        if min(self.n_samples, self.n_features, self.n_informative, self.n_classes) < 1:
            raise InvalidSpecError("counts must be positive")
        if self.n_redundant < 0:
            raise InvalidSpecError("n_redundant must be >= 0")
        if self.n_informative + self.n_redundant > self.n_features:
            raise InvalidSpecError("informative + redundant exceeds n_features")
        if self.n_classes < 2:
            raise InvalidSpecError("need at least two classes")
        if self.n_classes > 2 ** self.n_informative:
            raise InvalidSpecError("more classes than informative hypercube vertices")
        if not 0.0 <= self.flip_y <= 1.0:
            raise InvalidSpecError("flip_y must lie in [0, 1]")
        if self.class_sep <= 0:
            raise InvalidSpecError("class_sep must be positive")


def load_csv(
    path,
    label_column: str,
    missing_token: str = "",
    drop_missing_over: float | None = DEFAULT_MISSING_DROP_THRESHOLD,
) -> Dataset:
    """Read an RFC-4180-style CSV with a header row into a Dataset.

    Parameters
    ----------
    path : str or Path
        CSV file, UTF-8, '.' decimal separator.
    label_column : str
        Header name of the label column. Distinct label strings are sorted
        and mapped to class ids by rank.
    missing_token : str
        Cell content that marks a missing value (default: empty cell).
    drop_missing_over : float or None
        Drop any feature whose missing fraction exceeds this threshold
        before returning (default 0.25); None disables the filter.

    Raises
    ------
    MissingFileError, MissingLabelColumnError, UnparsableCellError,
    SingleClassError
    """
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise SingleClassError(f"{path}: empty file") from None
            rows = list(reader)
    except FileNotFoundError:
        raise MissingFileError(f"no such file: {path}") from None

    if label_column not in header:
        raise MissingLabelColumnError(
            f"label column {label_column!r} not in header {header}"
        )
    label_pos = header.index(label_column)
    feature_names = [h for i, h in enumerate(header) if i != label_pos]

    labels: list[str] = []
    values = np.empty((len(rows), len(feature_names)), dtype=float)
    mask = np.zeros_like(values, dtype=bool)
    for r, row in enumerate(rows):
        if len(row) != len(header):
            raise UnparsableCellError(
                r, len(row), f"row has {len(row)} cells, expected {len(header)}"
            )
        labels.append(row[label_pos])
        c = 0
        for i, cell in enumerate(row):
            if i == label_pos:
                continue
            if cell == missing_token:
                values[r, c] = np.nan
                mask[r, c] = True
            else:
                try:
                    values[r, c] = float(cell)
                except ValueError:
                    raise UnparsableCellError(r, i, cell) from None
            c += 1

    class_names = sorted(set(labels))
    if len(class_names) < 2:
        raise SingleClassError(f"label column has {len(class_names)} distinct value(s)")
    rank = {name: i for i, name in enumerate(class_names)}
    y = np.array([rank[s] for s in labels], dtype=int)

    if drop_missing_over is not None and len(rows):
        frac = mask.mean(axis=0)
        keep = frac <= drop_missing_over
        values = values[:, keep]
        mask = mask[:, keep]
        feature_names = [n for n, k in zip(feature_names, keep) if k]

    return Dataset(
        X=values,
        y=y,
        feature_names=feature_names,
        class_names=class_names,
        missing_mask=mask if mask.any() else None,
    )


def save_csv(d: Dataset, path, label_column: str = "label", missing_token: str = "") -> None:
    """Write a Dataset back to CSV (label column last, class names as labels)."""
    mask = d.missing_mask
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(d.feature_names) + [label_column])
        for i in range(d.n_samples):
            row = []
            for j in range(d.n_features):
                if mask is not None and mask[i, j]:
                    row.append(missing_token)
                else:
                    row.append(repr(float(d.X[i, j])))
            row.append(d.class_names[d.y[i]])
            writer.writerow(row)


def impute_knn(d: Dataset, k: int = DEFAULT_IMPUTE_NEIGHBORS) -> Dataset:
    """Fill missing cells with the mean of the k nearest rows.

    Distances between two rows use only the features observed in both,
    normalized by the count of shared features. Donor rows for a cell must
    have that column observed. All fills are computed from the original
    (pre-imputation) values, which makes the operation idempotent.

    Raises
    ------
    NotEnoughDonorsError
        If any column with missing entries has fewer than k donor rows.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if not d.has_missing():
        return d

    X = d.X
    mask = d.missing_mask
    present = ~mask
    filled = X.copy()

    rows_with_missing = np.flatnonzero(mask.any(axis=1))
    for i in rows_with_missing:
        # mean squared difference over shared observed features
        shared = present & present[i]
        n_shared = shared.sum(axis=1)
        diff = np.where(shared, X - X[i], 0.0)
        with np.errstate(invalid="ignore"):
            dist = np.sqrt(np.where(n_shared > 0, np.nansum(diff * diff, axis=1), np.inf)
                           / np.maximum(n_shared, 1))
        dist[n_shared == 0] = np.inf
        dist[i] = np.inf
        for j in np.flatnonzero(mask[i]):
            donor_ok = present[:, j] & np.isfinite(dist)
            donors = np.flatnonzero(donor_ok)
            if donors.size < k:
                raise NotEnoughDonorsError(
                    f"column {d.feature_names[j]!r}: {donors.size} donors < k={k}"
                )
            order = donors[np.argsort(dist[donors], kind="stable")[:k]]
            filled[i, j] = X[order, j].mean()

    return Dataset(
        X=filled,
        y=d.y,
        feature_names=d.feature_names,
        class_names=d.class_names,
        missing_mask=None,
    )


def fit_scaler(d: Dataset, rows) -> Scaler:
    """Estimate per-feature mean and std (population) on the given rows."""
    rows = np.asarray(rows, dtype=int)
    if rows.size == 0:
        raise EmptyRowSetError("cannot fit a scaler on zero rows")
    sub = d.X[rows]
    mean = sub.mean(axis=0)
    std = sub.std(axis=0)
    std = np.where(std > 0, std, 1.0)
    return Scaler(mean=mean, std=std)


def apply_scaler(s: Scaler, d: Dataset) -> Dataset:
    """Standardize every row of ``d`` with a fitted scaler (apply exactly once)."""
    return Dataset(
        X=(d.X - s.mean) / s.std,
        y=d.y,
        feature_names=d.feature_names,
        class_names=d.class_names,
        missing_mask=d.missing_mask,
    )


def split(d: Dataset, seed: int) -> DataSplit:
    """Shuffle rows and carve out test/train/calibration indices.

    The test set takes round(0.25 * n) rows (half-up); the remainder is
    halved between train and calibration, train taking the extra row when
    odd. Deterministic for a given seed.
    """
    n = d.n_samples
    if n < 8:
        raise TooFewSamplesError(f"need at least 8 samples, got {n}")
    n_test = math.floor(TEST_FRACTION * n + 0.5)
    rest = n - n_test
    n_train = rest - rest // 2
    perm = np.random.default_rng(seed).permutation(n)
    return DataSplit(
        train_idx=perm[:n_train],
        calib_idx=perm[n_train:n_train + (rest - n_train)],
        test_idx=perm[rest:],
    )


def split_with_all_classes(d: Dataset, seed: int, max_tries: int = 10) -> DataSplit:
    """Split, retrying with seed+1 while train or calibration misses a class.

    Raises TooFewSamplesError when no class-preserving split is found in
    ``max_tries`` attempts.
    """
    m = d.n_classes
    for attempt in range(max_tries):
        sp = split(d, seed + attempt)
        ok = all(
            np.unique(d.y[idx]).size == m for idx in (sp.train_idx, sp.calib_idx)
        )
        if ok:
            return sp
    raise TooFewSamplesError(
        f"no split kept all {m} classes in train and calibration after {max_tries} tries"
    )


def generate_synthetic(spec: SyntheticSpec) -> tuple[Dataset, np.ndarray]:
    """Generate a seeded multiclass dataset with known informative features.

    Informative features are drawn from unit-variance Gaussian clusters
    whose class centers sit on distinct vertices of a hypercube scaled by
    ``class_sep``. Redundant features are random linear combinations of the
    informative block; the rest is standard-normal noise. Columns are
    shuffled; the second return value gives the post-shuffle indices of the
    informative features.
    """
    rng = np.random.default_rng(spec.seed)
    n, l = spec.n_samples, spec.n_features
    li, lr, m = spec.n_informative, spec.n_redundant, spec.n_classes

    # distinct hypercube vertices as class centers
    vertices: list[tuple[int, ...]] = []
    seen = set()
    while len(vertices) < m:
        v = tuple(int(b) for b in rng.integers(0, 2, size=li))
        if v not in seen:
            seen.add(v)
            vertices.append(v)
    centers = (2.0 * np.array(vertices, dtype=float) - 1.0) * spec.class_sep

    y = np.arange(n) % m
    X_info = centers[y] + rng.standard_normal((n, li))
    blocks = [X_info]
    if lr:
        combo = rng.standard_normal((li, lr))
        blocks.append(X_info @ combo)
    if l - li - lr:
        blocks.append(rng.standard_normal((n, l - li - lr)))
    X = np.hstack(blocks)

    n_flip = math.floor(spec.flip_y * n + 0.5)
    if n_flip:
        flip_rows = rng.choice(n, size=n_flip, replace=False)
        y = y.copy()
        y[flip_rows] = rng.integers(0, m, size=n_flip)

    perm = rng.permutation(l)
    X = X[:, perm]
    informative = np.flatnonzero(perm < li)

    dataset = Dataset(
        X=X,
        y=y,
        feature_names=tuple(f"f{j}" for j in range(l)),
        class_names=tuple(f"c{k}" for k in range(m)),
    )
    return dataset, informative


def save_synthetic(spec: SyntheticSpec, path) -> tuple[Dataset, np.ndarray]:
    """Generate, write ``<path>`` as CSV plus a ``<stem>.meta.json`` sidecar."""
    dataset, informative = generate_synthetic(spec)
    save_csv(dataset, path)
    meta = {
        "informative_indices": [int(j) for j in informative],
        "spec": asdict(spec),
    }
    sidecar = str(path)
    if sidecar.endswith(".csv"):
        sidecar = sidecar[: -len(".csv")]
    with open(sidecar + ".meta.json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return dataset, informative
