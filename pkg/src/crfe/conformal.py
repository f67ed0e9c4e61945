"""Inductive conformal prediction on top of one-vs-all linear scores.

A calibration set supplies reference non-conformity scores; test samples
get one p-value per candidate label and a prediction set keeps the labels
whose p-value exceeds the significance level. Ties between a test score
and calibration scores count in the test sample's favor (inclusive >=),
which preserves the validity guarantee.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .classifier import LinearModelSet, decision_matrix
from .exceptions import (
    ConfigError,
    DimensionMismatchError,
    EmptyCalibrationError,
)


def theta(y, k):
    """Agreement sign: +1 where y == k, else -1. Broadcasts like numpy."""
    return np.where(np.asarray(y) == np.asarray(k), 1, -1)


def binary_nonconformity(d, y, k):
    """Non-conformity of one binary model's score d for true label y.

    Samples of class k (theta = +1) are stranger the lower their score;
    all other samples are stranger the higher it.
    """
    return -theta(y, k) * np.asarray(d, dtype=float)


def multiclass_nonconformity(d_values, own_class: int, lam: float) -> float:
    """Combine per-class scores into one score for the candidate label.

    The own-class model contributes -lam * d_own; every other model
    contributes its score weighted by (1 - lam) / (m - 1).
    """
    d = np.asarray(d_values, dtype=float)
    m = d.shape[0]
    if not 0 <= own_class < m:
        raise ConfigError(f"own_class {own_class} out of range for {m} classes")
    if not 0.0 <= lam <= 1.0:
        raise ConfigError("lam must lie in [0, 1]")
    lam_prime = (1.0 - lam) / (m - 1)
    rest = d.sum() - d[own_class]
    return float(-lam * d[own_class] + lam_prime * rest)


def nonconformity_all_labels(D, lam: float) -> np.ndarray:
    """Score every sample under every candidate label.

    Parameters
    ----------
    D : ndarray of shape (n, m)
        Per-class decision values.
    lam : float

    Returns
    -------
    ndarray of shape (n, m)
        Entry [i, y] is the non-conformity of sample i if its label were y.
    """
    D = np.asarray(D, dtype=float)
    if D.ndim != 2 or D.shape[1] < 2:
        raise DimensionMismatchError("D must be (n_samples, n_classes>=2)")
    if not 0.0 <= lam <= 1.0:
        raise ConfigError("lam must lie in [0, 1]")
    m = D.shape[1]
    lam_prime = (1.0 - lam) / (m - 1)
    row_sum = D.sum(axis=1, keepdims=True)
    return -lam * D + lam_prime * (row_sum - D)


@dataclass(frozen=True, eq=False)
class CalibrationRecord:
    """Sorted non-conformity scores of the calibration samples."""

    alphas: np.ndarray

    def __post_init__(self):
        a = np.sort(np.asarray(self.alphas, dtype=float))
        if a.size == 0:
            raise EmptyCalibrationError("calibration set is empty")
        object.__setattr__(self, "alphas", a)

    @property
    def n(self) -> int:
        return self.alphas.shape[0]


def calibrate(ms: LinearModelSet, X_cal, y_cal) -> CalibrationRecord:
    """Score calibration samples at their true labels."""
    y_cal = np.asarray(y_cal, dtype=int)
    if y_cal.size == 0:
        raise EmptyCalibrationError("calibration set is empty")
    if y_cal.min() < 0 or y_cal.max() >= ms.n_classes:
        raise ConfigError("calibration labels outside model's class range")
    D = decision_matrix(ms, X_cal)
    if D.shape[0] != y_cal.shape[0]:
        raise DimensionMismatchError("X_cal rows do not match y_cal length")
    A = nonconformity_all_labels(D, ms.lam)
    return CalibrationRecord(alphas=A[np.arange(y_cal.size), y_cal])


def p_value(record: CalibrationRecord, alpha: float) -> float:
    """(#{calibration scores >= alpha} + 1) / (n + 1)."""
    ge = record.n - int(np.searchsorted(record.alphas, alpha, side="left"))
    return (ge + 1) / (record.n + 1)


def p_value_matrix(record: CalibrationRecord, A) -> np.ndarray:
    """Vectorized p_value over a matrix of candidate-label scores."""
    A = np.asarray(A, dtype=float)
    ge = record.n - np.searchsorted(record.alphas, A, side="left")
    return (ge + 1) / (record.n + 1)


@dataclass(frozen=True, eq=False)
class PredictionSet:
    """Label set for one sample at significance epsilon.

    members holds the class ids whose p-value strictly exceeds epsilon,
    in ascending order.
    """

    p: np.ndarray
    epsilon: float
    members: tuple[int, ...]

    @property
    def size(self) -> int:
        return len(self.members)

    def is_singleton(self) -> bool:
        return len(self.members) == 1

    def is_empty(self) -> bool:
        return not self.members

    def contains(self, y: int) -> bool:
        return int(y) in self.members


def _check_epsilon(epsilon: float) -> float:
    epsilon = float(epsilon)
    if not 0.0 <= epsilon <= 1.0:
        raise ConfigError("epsilon must lie in [0, 1]")
    return epsilon


def prediction_set(p_row, epsilon: float) -> PredictionSet:
    """Keep the labels whose p-value exceeds epsilon."""
    epsilon = _check_epsilon(epsilon)
    p = np.asarray(p_row, dtype=float)
    members = tuple(int(k) for k in np.flatnonzero(p > epsilon))
    return PredictionSet(p=p, epsilon=epsilon, members=members)


def prediction_mask(P, epsilon: float) -> np.ndarray:
    """Boolean matrix (n, m): True where the label enters the set."""
    epsilon = _check_epsilon(epsilon)
    return np.asarray(P, dtype=float) > epsilon


def conformal_predict(
    ms: LinearModelSet, record: CalibrationRecord, X, epsilon: float
) -> tuple[np.ndarray, np.ndarray]:
    """Full test-time pipeline: scores -> p-values -> set membership.

    Returns
    -------
    P : ndarray of shape (n, m)
        Per-label p-values.
    mask : ndarray of bool, shape (n, m)
        Prediction-set membership at the given epsilon.
    """
    epsilon = _check_epsilon(epsilon)
    D = decision_matrix(ms, X)
    A = nonconformity_all_labels(D, ms.lam)
    P = p_value_matrix(record, A)
    return P, P > epsilon


def write_prediction_csv(path, P, mask, class_names, sample_ids=None) -> None:
    """Write one row per test sample: id, per-class p-values, joined set.

    Columns are ``sample_id, p_class_0..p_class_{m-1}, set``; the set cell
    joins member class names with '|' (empty cell for the empty set).
    Floats are written with round-trip precision.
    """
    P = np.asarray(P, dtype=float)
    mask = np.asarray(mask, dtype=bool)
    n, m = P.shape
    if mask.shape != (n, m) or len(class_names) != m:
        raise DimensionMismatchError("P, mask and class_names disagree on shape")
    if sample_ids is None:
        sample_ids = range(n)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write("sample_id," + ",".join(f"p_class_{k}" for k in range(m)) + ",set\n")
        for i, sid in zip(range(n), sample_ids):
            cells = [str(sid)]
            cells += [repr(float(v)) for v in P[i]]
            cells.append("|".join(class_names[k] for k in np.flatnonzero(mask[i])))
            fh.write(",".join(cells) + "\n")
