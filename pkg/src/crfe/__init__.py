"""Conformal recursive feature elimination.

Set-valued prediction with per-sample confidence for one-vs-all linear
classifiers, a feature-wise non-conformity score driving recursive
backward elimination, an automatic stopping criterion, a weight-norm
elimination baseline, stability indices, and an experiment harness.
"""

from .classifier import (
    LinearModel,
    LinearModelSet,
    TrainConfig,
    decision_matrix,
    decision_value,
    hinge_objective,
    load_model,
    model_set_from_json,
    model_set_to_json,
    restrict,
    save_model,
    train_binary,
    train_ova,
)
from .conformal import (
    CalibrationRecord,
    PredictionSet,
    binary_nonconformity,
    calibrate,
    conformal_predict,
    multiclass_nonconformity,
    nonconformity_all_labels,
    p_value,
    p_value_matrix,
    prediction_mask,
    prediction_set,
    write_prediction_csv,
)
from .consistency import (
    SubsetFamily,
    jaccard_multi,
    kuncheva,
    kuncheva_family,
    weighted_consistency,
)
from .data import (
    DataSplit,
    Dataset,
    Scaler,
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
from .exceptions import CrfeError
from .harness import (
    ExperimentConfig,
    ResultsTable,
    StoppingParams,
    config_from_dict,
    config_from_json,
    consistency_report,
    emit_outputs,
    run_all,
    run_comparison,
    run_consistency,
    run_stopping_benchmark,
)
from .metrics import (
    PointMetricsReport,
    SetMetricsReport,
    point_metrics,
    point_predict,
    set_metrics,
)
from .selection import (
    BetaCriterion,
    BetaStopResult,
    BetaVector,
    FixedSize,
    SelectionStep,
    SelectionTrace,
    StopReason,
    argmax_beta,
    beta_measures,
    beta_stop_check,
    delta_nonconformity_oracle,
    rfe_criterion,
    run_crfe,
    run_rfe,
    trace_to_csv,
    trace_to_json,
)

__version__ = "0.1.0"

__all__ = [
    "BetaCriterion",
    "BetaStopResult",
    "BetaVector",
    "CalibrationRecord",
    "CrfeError",
    "DataSplit",
    "Dataset",
    "ExperimentConfig",
    "FixedSize",
    "LinearModel",
    "LinearModelSet",
    "PointMetricsReport",
    "PredictionSet",
    "ResultsTable",
    "Scaler",
    "SelectionStep",
    "SelectionTrace",
    "SetMetricsReport",
    "StopReason",
    "StoppingParams",
    "SubsetFamily",
    "SyntheticSpec",
    "TrainConfig",
    "apply_scaler",
    "argmax_beta",
    "beta_measures",
    "beta_stop_check",
    "binary_nonconformity",
    "calibrate",
    "config_from_dict",
    "config_from_json",
    "conformal_predict",
    "consistency_report",
    "decision_matrix",
    "decision_value",
    "delta_nonconformity_oracle",
    "emit_outputs",
    "fit_scaler",
    "generate_synthetic",
    "hinge_objective",
    "impute_knn",
    "jaccard_multi",
    "kuncheva",
    "kuncheva_family",
    "load_csv",
    "load_model",
    "model_set_from_json",
    "model_set_to_json",
    "multiclass_nonconformity",
    "nonconformity_all_labels",
    "p_value",
    "p_value_matrix",
    "point_metrics",
    "point_predict",
    "prediction_mask",
    "prediction_set",
    "restrict",
    "rfe_criterion",
    "run_all",
    "run_comparison",
    "run_consistency",
    "run_crfe",
    "run_rfe",
    "run_stopping_benchmark",
    "save_csv",
    "save_model",
    "save_synthetic",
    "set_metrics",
    "split",
    "split_with_all_classes",
    "trace_to_csv",
    "trace_to_json",
    "train_binary",
    "train_ova",
    "weighted_consistency",
    "write_prediction_csv",
]
