"""Command-line front end.

Subcommands: ``synth`` (generate a synthetic CSV plus metadata sidecar),
``select`` (run one selector on one split and write its artifacts),
``bench`` (full comparison + stopping benchmark + reports/plots) and
``consistency`` (stability report only). Exit codes: 0 on success, 2 for
configuration mistakes, 3 for data problems.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .classifier import TrainConfig, save_model, train_ova
from .conformal import calibrate, conformal_predict, write_prediction_csv
from .data import (
    SyntheticSpec,
    apply_scaler,
    fit_scaler,
    impute_knn,
    load_csv,
    save_synthetic,
    split_with_all_classes,
)
from .exceptions import (
    ConfigError,
    CrfeError,
    InvalidPolicyError,
    InvalidSpecError,
    MissingLabelColumnError,
)
from .harness import (
    config_from_json,
    consistency_report,
    run_all,
    run_comparison,
    write_consistency_csv,
)
from .selection import (
    BetaCriterion,
    FixedSize,
    run_crfe,
    run_rfe,
    trace_to_csv,
    trace_to_json,
)

_CONFIG_ERRORS = (ConfigError, InvalidSpecError, InvalidPolicyError, MissingLabelColumnError)


def _parse_stop(text: str, sigma: float, psi: int):
    if text == "beta":
        return BetaCriterion(sigma=sigma, psi=psi)
    if text.startswith("fixed:"):
        try:
            return FixedSize(int(text[len("fixed:"):]))
        except ValueError:
            raise ConfigError(f"bad fixed-size target in {text!r}") from None
    raise ConfigError(f"--stop must be 'fixed:<t>' or 'beta', got {text!r}")


def _cmd_synth(args) -> int:
    try:
        with open(args.spec, encoding="utf-8") as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"no such spec file: {args.spec}") from None
    except json.JSONDecodeError as e:
        raise ConfigError(f"spec file is not valid JSON: {e}") from None
    if not isinstance(data, dict):
        raise ConfigError("spec file must hold a JSON object")
    try:
        spec = SyntheticSpec(**data)
    except TypeError as e:
        raise ConfigError(f"bad generator spec: {e}") from None
    save_synthetic(spec, args.out)
    return 0


def _cmd_select(args) -> int:
    d = load_csv(args.data, label_column=args.label)
    if d.has_missing():
        d = impute_knn(d)
    policy = _parse_stop(args.stop, args.sigma, args.psi)
    sp = split_with_all_classes(d, args.seed)
    ds = apply_scaler(fit_scaler(d, sp.train_idx), d)
    X_tr, y_tr = ds.X[sp.train_idx], ds.y[sp.train_idx]
    X_cal, y_cal = ds.X[sp.calib_idx], ds.y[sp.calib_idx]
    X_te = ds.X[sp.test_idx]
    tcfg = TrainConfig(seed=args.seed)
    runner = run_crfe if args.method == "crfe" else run_rfe
    trace = runner(X_tr, y_tr, X_cal, y_cal, d.n_classes, policy, tcfg, args.lam)

    os.makedirs(args.out, exist_ok=True)
    trace_to_csv(trace, os.path.join(args.out, "trace.csv"))
    with open(os.path.join(args.out, "trace.json"), "w", encoding="utf-8") as fh:
        json.dump(trace_to_json(trace, d.feature_names), fh, indent=2)
        fh.write("\n")
    cols = list(trace.selected)
    ms = train_ova(X_tr[:, cols], y_tr, d.n_classes, tcfg, args.lam,
                   active_features=cols)
    save_model(ms, os.path.join(args.out, "model.json"))
    rec = calibrate(ms, X_cal[:, cols], y_cal)
    P, mask = conformal_predict(ms, rec, X_te[:, cols], args.epsilon)
    write_prediction_csv(os.path.join(args.out, "predictions.csv"),
                         P, mask, d.class_names, sample_ids=sp.test_idx)
    return 0


def _cmd_bench(args) -> int:
    run_all(config_from_json(args.config), args.out)
    return 0


def _cmd_consistency(args) -> int:
    table = run_comparison(config_from_json(args.config))
    os.makedirs(args.out, exist_ok=True)
    write_consistency_csv(consistency_report(table),
                          os.path.join(args.out, "consistency.csv"))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="crfe",
        description="Conformal recursive feature elimination toolkit",
    )
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("synth", help="generate a synthetic dataset CSV")
    sp.add_argument("--spec", required=True, help="generator spec JSON")
    sp.add_argument("--out", required=True, help="output CSV path")
    sp.set_defaults(func=_cmd_synth)

    sp = sub.add_parser("select", help="run one selector on one seeded split")
    sp.add_argument("--data", required=True, help="input CSV")
    sp.add_argument("--label", required=True, help="label column name")
    sp.add_argument("--method", required=True, choices=("crfe", "rfe"))
    sp.add_argument("--stop", required=True, help="'fixed:<t>' or 'beta'")
    sp.add_argument("--sigma", type=float, default=5.0)
    sp.add_argument("--psi", type=int, default=10)
    sp.add_argument("--lambda", dest="lam", type=float, default=0.5)
    sp.add_argument("--epsilon", type=float, default=0.1)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True, help="output directory")
    sp.set_defaults(func=_cmd_select)

    sp = sub.add_parser("bench", help="full comparison and stopping benchmark")
    sp.add_argument("--config", required=True, help="experiment config JSON")
    sp.add_argument("--out", required=True, help="output directory")
    sp.set_defaults(func=_cmd_bench)

    sp = sub.add_parser("consistency", help="subset stability report")
    sp.add_argument("--config", required=True, help="experiment config JSON")
    sp.add_argument("--out", required=True, help="output directory")
    sp.set_defaults(func=_cmd_consistency)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _CONFIG_ERRORS as e:
        print(f"crfe: config error: {e}", file=sys.stderr)
        return 2
    except (CrfeError, OSError) as e:
        print(f"crfe: data error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
