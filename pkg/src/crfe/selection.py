"""Recursive feature elimination driven by calibration non-conformity.

Each iteration retrains the one-vs-all models on the surviving features
and scores every feature j with

    beta_j = -lam * sum_i w_j^{y_i} x_ij + lam' * sum_i sum_{r != y_i} w_j^r x_ij

over the calibration samples. beta_j equals the drop in total calibration
non-conformity when feature j's contribution is deleted from every score
(no retraining), so the feature with the largest beta is the one whose
removal makes the calibration set look most conforming; it is eliminated
and the loop continues. Stopping is either a fixed target size or an
automatic criterion watching the mean-beta trajectory. A classical
baseline that removes the smallest squared-weight feature shares the same
engine.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .classifier import (
    LinearModelSet,
    TrainConfig,
    decision_matrix,
    restrict,
    train_ova,
)
from .conformal import nonconformity_all_labels
from .exceptions import (
    DimensionMismatchError,
    EmptyVectorError,
    InvalidPolicyError,
)

DEFAULT_SIGMA = 5.0
DEFAULT_PSI = 10
DEFAULT_WARMUP = 5


# ------------------------------------------------------------------ scoring


@dataclass(frozen=True, eq=False)
class BetaVector:
    """Per-feature elimination scores aligned with the active features."""

    values: np.ndarray
    active_features: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        object.__setattr__(self, "active_features", tuple(self.active_features))
        if self.values.shape != (len(self.active_features),):
            raise DimensionMismatchError("values length != active feature count")

    def mean(self) -> float:
        return float(self.values.mean())


def beta_measures(ms: LinearModelSet, X, y) -> BetaVector:
    """Score every active feature on a calibration set.

    Closed form over the whole set: with t1_j = sum_i w_j^{y_i} x_ij and
    t2_j = (sum_k w_j^k)(sum_i x_ij) - t1_j,

        beta_j = -lam * t1_j + lam' * t2_j.

    Runs in O((n + m) l) after the decision weights are stacked; bias
    terms cancel and never enter.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    if X.ndim != 2 or X.shape[1] != ms.n_features:
        raise DimensionMismatchError("X columns do not match the model's features")
    if y.shape != (X.shape[0],):
        raise DimensionMismatchError("y length does not match X rows")
    if y.size and (y.min() < 0 or y.max() >= ms.n_classes):
        raise DimensionMismatchError("labels outside the model's class range")
    W = ms.weight_matrix()
    t1 = (X * W[y]).sum(axis=0)
    t2 = W.sum(axis=0) * X.sum(axis=0) - t1
    values = -ms.lam * t1 + ms.lambda_prime * t2
    return BetaVector(values=values, active_features=ms.active_features)


def delta_nonconformity_oracle(ms: LinearModelSet, X, y, position: int) -> float:
    """Change in total non-conformity when one feature's contribution goes.

    Rescoring implementation kept independent of the closed form: the total
    calibration score is computed with the full model and again with the
    feature sliced out of every weight vector, and the difference
    (full minus reduced) is returned. Agrees with beta_measures to
    floating-point accuracy.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    rows = np.arange(y.size)
    full = nonconformity_all_labels(decision_matrix(ms, X), ms.lam)[rows, y]
    keep = [p for p in range(ms.n_features) if p != position]
    sub = restrict(ms, keep)
    reduced = nonconformity_all_labels(decision_matrix(sub, X[:, keep]), ms.lam)[rows, y]
    return float(full.sum() - reduced.sum())


def argmax_beta(beta: BetaVector) -> int:
    """Position of the largest score; ties go to the lowest original index."""
    if beta.values.size == 0:
        raise EmptyVectorError("no features left to score")
    return int(np.argmax(beta.values))


def rfe_criterion(ms: LinearModelSet) -> np.ndarray:
    """Classical elimination score: sum over classes of squared weights."""
    W = ms.weight_matrix()
    return (W * W).sum(axis=0)


# ----------------------------------------------------------------- stopping


@dataclass(frozen=True)
class FixedSize:
    """Stop once the active set is down to ``target`` features."""

    target: int

    def __post_init__(self):
        if self.target < 1:
            raise InvalidPolicyError("target size must be >= 1")


@dataclass(frozen=True)
class BetaCriterion:
    """Stop when the mean-beta trajectory bends abnormally hard.

    The second difference of the mean-beta history is compared against
    sigma times the standard deviation of its own last psi values
    (excluding the newest). No firing during the first ``warmup``
    iterations. ``fire_when_below`` flips the comparison for
    compatibility with implementations that stop while the trajectory is
    still flat.
    """

    sigma: float = DEFAULT_SIGMA
    psi: int = DEFAULT_PSI
    warmup: int = DEFAULT_WARMUP
    fire_when_below: bool = False

    def __post_init__(self):
        if self.sigma < 1:
            raise InvalidPolicyError("sigma must be >= 1")
        if self.psi < 3:
            raise InvalidPolicyError("psi must be >= 3")
        if self.warmup < 0:
            raise InvalidPolicyError("warmup must be >= 0")


@dataclass(frozen=True)
class BetaStopResult:
    fired: bool
    second_derivative: float
    threshold: float


def beta_stop_check(
    mean_history,
    second_derivative_history,
    sigma: float = DEFAULT_SIGMA,
    psi: int = DEFAULT_PSI,
    warmup: int = DEFAULT_WARMUP,
    fire_when_below: bool = False,
) -> BetaStopResult:
    """Evaluate the automatic stop.

    The newest second difference of ``mean_history`` (window-limited to
    the last psi means) is compared against sigma times the population
    std of the last psi entries of ``second_derivative_history``, which
    must hold the values from earlier iterations only; the newest value
    is computed here and returned for the caller to append. A
    zero-variance window falls back to a small absolute threshold scaled
    by the newest mean, so an exactly flat history still fires on a real
    kink. Never fires while fewer than 3 means exist, while the prior
    derivative history is empty, or during the first ``warmup``
    iterations.
    """
    hist = np.asarray(mean_history, dtype=float)
    if hist.size < 3:
        return BetaStopResult(False, math.nan, math.nan)
    window = hist[-psi:] if psi >= 3 else hist[-3:]
    latest = float(np.diff(window, n=2)[-1])
    prior = np.asarray(second_derivative_history, dtype=float)[-psi:]
    if prior.size == 0:
        return BetaStopResult(False, latest, math.nan)
    std = float(prior.std())
    threshold = max(sigma * std, 1e-9 * max(1.0, abs(float(hist[-1]))))
    if hist.size <= warmup:
        return BetaStopResult(False, latest, threshold)
    if fire_when_below:
        fired = abs(latest) < threshold
    else:
        fired = abs(latest) > threshold
    return BetaStopResult(fired, latest, threshold)


# ------------------------------------------------------------------- traces


class StopReason(Enum):
    REACHED_TARGET_SIZE = "ReachedTargetSize"
    BETA_CRITERION_FIRED = "BetaCriterionFired"
    EXHAUSTED_TO_ONE_FEATURE = "ExhaustedToOneFeature"


@dataclass(frozen=True)
class SelectionStep:
    """One elimination-loop pass.

    removed_feature is the original column index, or None on the pass
    where the automatic criterion fired (nothing is removed then).
    remaining_count counts active features after the pass. criterion_value
    is the removed feature's score; mean_beta / second_derivative are NaN
    where the method does not compute them.
    """

    iteration: int
    removed_feature: int | None
    criterion_value: float
    mean_beta: float
    second_derivative: float
    remaining_count: int


@dataclass(frozen=True, eq=False)
class SelectionTrace:
    """Full record of one elimination run."""

    method: str
    steps: tuple[SelectionStep, ...]
    selected: tuple[int, ...]
    stop_reason: StopReason

    @property
    def n_selected(self) -> int:
        return len(self.selected)


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        if math.isnan(v):
            return ""
        return repr(v)
    return str(v)


TRACE_CSV_HEADER = (
    "iteration,removed_feature,criterion_value,mean_beta,second_derivative,remaining_count"
)


def trace_to_csv(trace: SelectionTrace, path) -> None:
    """One row per pass; NaN and None become empty cells."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(TRACE_CSV_HEADER + "\n")
        for s in trace.steps:
            cells = [
                _cell(s.iteration),
                _cell(s.removed_feature),
                _cell(s.criterion_value),
                _cell(s.mean_beta),
                _cell(s.second_derivative),
                _cell(s.remaining_count),
            ]
            fh.write(",".join(cells) + "\n")


def trace_to_json(trace: SelectionTrace, feature_names=None) -> dict:
    """Plain-dict form (NaN mapped to None) for json.dump.

    When feature_names are given, final_subset lists names; otherwise it
    lists the original column indices.
    """

    def num(v):
        if v is None or (isinstance(v, float) and math.isnan(v)):
            return None
        return v

    if feature_names is None:
        final = list(trace.selected)
    else:
        final = [feature_names[j] for j in trace.selected]
    return {
        "method": trace.method,
        "stop_reason": trace.stop_reason.value,
        "final_subset": final,
        "steps": [
            {
                "iteration": s.iteration,
                "removed_feature": num(s.removed_feature),
                "criterion_value": num(s.criterion_value),
                "mean_beta": num(s.mean_beta),
                "second_derivative": num(s.second_derivative),
                "remaining_count": s.remaining_count,
            }
            for s in trace.steps
        ],
    }


# ------------------------------------------------------------------- engine


def _run_elimination(
    X_train,
    y_train,
    X_cal,
    y_cal,
    n_classes: int,
    policy,
    config: TrainConfig,
    lam: float,
    method: str,
    observer=None,
):
    X_train = np.asarray(X_train, dtype=float)
    X_cal = np.asarray(X_cal, dtype=float)
    if X_train.ndim != 2 or X_cal.ndim != 2 or X_train.shape[1] != X_cal.shape[1]:
        raise DimensionMismatchError("train and calibration matrices disagree on columns")
    if not isinstance(policy, (FixedSize, BetaCriterion)):
        raise InvalidPolicyError(f"unsupported policy {policy!r}")
    if X_train.shape[1] < 1:
        raise EmptyVectorError("no features to select from")
    if isinstance(policy, FixedSize) and policy.target >= X_train.shape[1]:
        raise InvalidPolicyError(
            f"target {policy.target} must be below the initial {X_train.shape[1]} features"
        )

    active = list(range(X_train.shape[1]))
    steps: list[SelectionStep] = []
    mean_hist: list[float] = []
    d2_hist: list[float] = []
    iteration = 0
    while True:
        iteration += 1
        ms = train_ova(
            X_train[:, active], y_train, n_classes, config, lam,
            active_features=active,
        )
        if method == "crfe":
            beta = beta_measures(ms, X_cal[:, active], y_cal)
            crit = beta.values
            mean_hist.append(beta.mean())
        else:
            crit = rfe_criterion(ms)
        if observer is not None:
            observer(iteration, tuple(active), ms, crit)

        if method == "crfe":
            # the derivative record is kept under both policies so traces
            # from fixed-size runs can be replayed against the criterion
            if isinstance(policy, BetaCriterion):
                check = beta_stop_check(
                    mean_hist, d2_hist, policy.sigma, policy.psi,
                    policy.warmup, policy.fire_when_below,
                )
            else:
                check = beta_stop_check(mean_hist, d2_hist)
                check = BetaStopResult(False, check.second_derivative, check.threshold)
            if not math.isnan(check.second_derivative):
                d2_hist.append(check.second_derivative)
        else:
            check = BetaStopResult(False, math.nan, math.nan)

        if isinstance(policy, FixedSize):
            if len(active) <= policy.target:
                reason = StopReason.REACHED_TARGET_SIZE
                break
        else:
            if check.fired:
                steps.append(SelectionStep(
                    iteration=iteration,
                    removed_feature=None,
                    criterion_value=math.nan,
                    mean_beta=mean_hist[-1],
                    second_derivative=check.second_derivative,
                    remaining_count=len(active),
                ))
                reason = StopReason.BETA_CRITERION_FIRED
                break
            if len(active) == 1:
                reason = StopReason.EXHAUSTED_TO_ONE_FEATURE
                break

        if method == "crfe":
            pos = int(np.argmax(crit))
        else:
            pos = int(np.argmin(crit))
        steps.append(SelectionStep(
            iteration=iteration,
            removed_feature=active[pos],
            criterion_value=float(crit[pos]),
            mean_beta=mean_hist[-1] if method == "crfe" else math.nan,
            second_derivative=check.second_derivative,
            remaining_count=len(active) - 1,
        ))
        active.pop(pos)

    return SelectionTrace(
        method=method,
        steps=tuple(steps),
        selected=tuple(active),
        stop_reason=reason,
    )


def run_crfe(
    X_train,
    y_train,
    X_cal,
    y_cal,
    n_classes: int,
    policy,
    config: TrainConfig = TrainConfig(),
    lam: float = 0.5,
    observer=None,
) -> SelectionTrace:
    """Conformal elimination: retrain, score with beta, drop the largest.

    policy is FixedSize or BetaCriterion. The calibration split feeds the
    beta scores and is never used for weight fitting.
    """
    return _run_elimination(
        X_train, y_train, X_cal, y_cal, n_classes, policy, config, lam,
        method="crfe", observer=observer,
    )


def run_rfe(
    X_train,
    y_train,
    X_cal,
    y_cal,
    n_classes: int,
    policy,
    config: TrainConfig = TrainConfig(),
    lam: float = 0.5,
    observer=None,
) -> SelectionTrace:
    """Weight-norm elimination baseline; drops the smallest squared weight.

    Accepts the calibration split so callers can swap methods freely, but
    the criterion itself only reads the trained weights. Only FixedSize
    stopping applies.
    """
    if isinstance(policy, BetaCriterion):
        raise InvalidPolicyError("the baseline has no automatic stop; use FixedSize")
    return _run_elimination(
        X_train, y_train, X_cal, y_cal, n_classes, policy, config, lam,
        method="rfe", observer=observer,
    )
