"""Command-line front door for the toolkit.

Every subcommand accepts --seed and --config (a JSON file overriding the
defaults below). Success exits 0; failures print one machine-readable JSON
error line to stderr and exit nonzero.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .bundle import ModelBundle, cohort_fingerprint
from .cohort import CleansingConfig, Cohort, FeatureSchema, cleanse, default_schema, ingest_csv, write_csv
from .evaluate import classification_report, missing_sweep, rfe, risk_group_probability
from .explain import exact_shapley, permutation_importance, shap_dependence_export, shap_summary_export, tree_shap
from .forest import fit_forest, mdi_importance
from .logit import DEFAULT_SELECTION_RULES, fit_logit, relabel_binary, select_features
from .rules import CsppThresholds, RiskLabel, label_cohort
from .synth import CalibrationTargets, generate_cohort
from .tree import TrainConfig, fit_tree

DEFAULT_CONFIG = {
    "cleanse": {"missing_threshold": 0.60, "bp_correction": True},
    "cspp": {},  # CsppThresholds overrides
    "train": {},  # TrainConfig overrides
    "logit": {
        "variance_threshold": 0.001,
        "selection_rules": list(DEFAULT_SELECTION_RULES),
        # High risk is definitionally 1 under the relabeling whenever a
        # history factor is set, so those columns quasi-separate the classes
        # and are excluded from the regression by default.
        "extra_drops": ["History of Stroke", "History of TIA"],
        "max_iter": 100,
        "tol": 1e-8,
        "background_rows": 100,
    },
    "split": {"test_fraction": 0.2},
    "sweep": {"proportions": [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9],
              "repetitions": 100, "exclude_features": []},
    "targets": {},  # CalibrationTargets overrides
}


class CliError(Exception):
    def __init__(self, message: str, code: str = "invalid_input"):
        super().__init__(message)
        self.code = code


def _merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def load_config(path) -> dict:
    cfg = DEFAULT_CONFIG
    if path:
        with open(path, encoding="utf-8") as fh:
            cfg = _merge(cfg, json.load(fh))
    return cfg


def _schema(args) -> FeatureSchema:
    if args.schema:
        return FeatureSchema.load(args.schema)
    return default_schema()


def _cohort(args, config) -> Cohort:
    return ingest_csv(args.csv, _schema(args))


def _write_json(path, payload) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _thresholds(config) -> CsppThresholds:
    return CsppThresholds.from_dict(config.get("cspp", {}))


def _train_config(config, seed) -> TrainConfig:
    d = dict(config.get("train", {}))
    d.setdefault("seed", seed)
    return TrainConfig(**d)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_ingest(args, config):
    cohort = _cohort(args, config)
    write_csv(cohort, args.out)
    report = {"rows": cohort.row_count, "columns": len(cohort.schema),
              "parse_warnings": cohort.parse_warnings}
    _write_json(args.out + ".report.json", report)
    print(json.dumps(report))
    return 0


def cmd_cleanse(args, config):
    cohort = _cohort(args, config)
    cfg = CleansingConfig(**config["cleanse"])
    out, report = cleanse(cohort, cfg)
    write_csv(out, args.out)
    out.schema.save(args.out_schema or args.out + ".schema.json")
    _write_json(args.out + ".report.json", report.to_dict())
    print(json.dumps(report.to_dict()))
    return 0


def cmd_label(args, config):
    cohort = _cohort(args, config)
    labeled = label_cohort(cohort, _thresholds(config))
    write_csv(labeled, args.out)
    counts = np.bincount(labeled.labels, minlength=3)
    print(json.dumps({"low": int(counts[0]), "medium": int(counts[1]),
                      "high": int(counts[2])}))
    return 0


def cmd_synth(args, config):
    targets = CalibrationTargets.from_dict(config.get("targets", {}))
    cohort = generate_cohort(targets, n=args.n, seed=args.seed)
    write_csv(cohort, args.out)
    schema_path = args.out_schema or args.out + ".schema.json"
    cohort.schema.save(schema_path)
    print(json.dumps({"rows": cohort.row_count, "schema": schema_path}))
    return 0


def _train_logit(cohort, config, seed):
    lg = config["logit"]
    rules = list(lg["selection_rules"])
    if lg["extra_drops"]:
        rules.append({"drop": [c for c in lg["extra_drops"] if cohort.schema.has(c)]})
    selected = select_features(cohort, lg["variance_threshold"], rules)
    binary = relabel_binary(selected)
    model, diag = fit_logit(binary, max_iter=lg["max_iter"], tol=lg["tol"])
    rng = np.random.default_rng(seed)
    n_bg = min(lg["background_rows"], selected.row_count)
    bg = selected.values[rng.choice(selected.row_count, size=n_bg, replace=False)]
    return model, diag, selected.schema, bg


def cmd_train(args, config):
    cohort = _cohort(args, config)
    if cohort.labels is None:
        raise CliError("training CSV must carry a 'Risk Level' column", "missing_labels")
    tcfg = _train_config(config, args.seed)
    provenance = {"seed": args.seed, "data_fingerprint": cohort_fingerprint(cohort),
                  "rows": cohort.row_count}
    if args.kind == "tree":
        model = fit_tree(cohort, tcfg)
        bundle = ModelBundle(kind="tree", model=model, schema=cohort.schema,
                             cspp_thresholds=_thresholds(config),
                             cleanse_config=config["cleanse"],
                             target_class=int(RiskLabel.HIGH), provenance=provenance)
    elif args.kind == "forest":
        model = fit_forest(cohort, tcfg)
        bundle = ModelBundle(kind="forest", model=model, schema=cohort.schema,
                             cspp_thresholds=_thresholds(config),
                             cleanse_config=config["cleanse"],
                             target_class=int(RiskLabel.HIGH), provenance=provenance)
    elif args.kind == "logit":
        model, diag, schema, bg = _train_logit(cohort, config, args.seed)
        bundle = ModelBundle(kind="logit", model=model, schema=schema,
                             cspp_thresholds=_thresholds(config),
                             cleanse_config=config["cleanse"], target_class=1,
                             provenance=provenance, diagnostics=diag.to_dict(),
                             explain_background=bg)
    else:
        raise CliError(f"unknown model kind {args.kind!r}")
    bundle.save(args.out)
    report = {"kind": args.kind, "bundle": args.out, "rows": cohort.row_count}
    if args.kind == "logit":
        report["converged"] = bundle.diagnostics["converged"]
    print(json.dumps(report))
    return 0


def _predict_hard(bundle, cohort):
    if bundle.kind in ("tree", "forest"):
        common = [n for n in bundle.schema.names]
        X = cohort.select_columns(common).values
        return np.argmax(bundle.model.predict_proba(X), axis=1)
    proba = bundle.model.predict_cohort(cohort)
    return (proba >= 0.5).astype(np.int64)


def cmd_evaluate(args, config):
    bundle = ModelBundle.load(args.bundle)
    cohort = _cohort(args, config)
    if cohort.labels is None:
        raise CliError("evaluation CSV must carry a 'Risk Level' column", "missing_labels")
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    y_pred = _predict_hard(bundle, cohort)
    if bundle.kind == "logit":
        y_true = relabel_binary(cohort).labels
        names = ["class 0 (low/medium)", "class 1 (high/stroke)"]
    else:
        y_true = cohort.labels
        names = [lv.display for lv in (RiskLabel.LOW, RiskLabel.MEDIUM, RiskLabel.HIGH)]
    report = classification_report(y_true, y_pred, names)
    _write_json(out_dir / "classification_report.json", report.to_dict())
    (out_dir / "classification_report.txt").write_text(report.to_text() + "\n",
                                                       encoding="utf-8")
    written = ["classification_report.json", "classification_report.txt"]
    if bundle.kind == "logit":
        if bundle.diagnostics:
            _write_json(out_dir / "coefficient_table.json", bundle.diagnostics)
            _write_csv_rows(out_dir / "coefficient_table.csv",
                            ["name", "coef", "std_err", "z", "p_value", "ci_low", "ci_high"],
                            [[r["name"], r["coef"], r["std_err"], r["z"],
                              r["p_value"], r["ci_low"], r["ci_high"]]
                             for r in bundle.diagnostics["coefficients"]])
            written += ["coefficient_table.json", "coefficient_table.csv"]
        summary = risk_group_probability(bundle.model, cohort)
        _write_json(out_dir / "risk_group_probability.json", summary.to_dict())
        written.append("risk_group_probability.json")
    print(json.dumps({"accuracy": report.accuracy,
                      "weighted_precision": report.weighted_precision,
                      "files": written}))
    return 0


def _write_csv_rows(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def cmd_explain(args, config):
    bundle = ModelBundle.load(args.bundle)
    cohort = _cohort(args, config)
    data = cohort.select_columns(list(bundle.schema.names))
    model = bundle.model
    if args.method == "mdi":
        if bundle.kind == "logit":
            raise CliError("MDI needs a tree or forest bundle")
        imp = mdi_importance(model)
        payload = {"method": "mdi",
                   "importances": dict(zip(bundle.schema.names, map(float, imp)))}
        _write_json(args.out, payload)
    elif args.method == "permutation":
        if data.labels is None:
            raise CliError("permutation importance needs labeled data", "missing_labels")
        work = data if bundle.kind != "logit" else relabel_binary(data)
        rep = permutation_importance(model, work, repetitions=args.repetitions,
                                     seed=args.seed)
        _write_json(args.out, rep.to_dict())
    elif args.method == "shap":
        if args.row is not None:
            row = data.values[args.row]
            if bundle.kind == "logit":
                e = exact_shapley(model, row, bundle.explain_background,
                                  bundle.target_class)
            else:
                e = tree_shap(model, row, bundle.target_class)
            _write_json(args.out, {
                "method": "shap", "row": args.row,
                "base_value": e.base_value,
                "output_kind": e.output_kind,
                "contributions": dict(zip(bundle.schema.names,
                                          map(float, e.contributions))),
            })
        elif args.dependence:
            if bundle.kind == "logit":
                raise CliError("dependence export requires a tree or forest bundle")
            a, b = args.dependence.split(",")
            dep = shap_dependence_export(model, data, a.strip(), b.strip(),
                                         bundle.target_class)
            _write_csv_rows(args.out, ["value_a", "shap_a", "value_b"],
                            zip(dep.value_a, dep.shap_a, dep.value_b))
        else:
            if bundle.kind == "logit":
                raise CliError("summary export requires a tree or forest bundle; "
                               "use --row for logit bundles")
            exp = shap_summary_export(model, data, bundle.target_class)
            _write_csv_rows(args.out, ["feature", "row", "shap_value", "feature_value"],
                            exp.records())
            _write_json(str(args.out) + ".ranking.json",
                        {"base_value": exp.base_value,
                         "ranking": [{"feature": f, "mean_abs_shap": v}
                                     for f, v in exp.ranking]})
    else:
        raise CliError(f"unknown explain method {args.method!r}")
    print(json.dumps({"method": args.method, "out": str(args.out)}))
    return 0


def _forest_trainer(config, seed):
    tcfg = _train_config(config, seed)

    def train(cohort):
        return fit_forest(cohort, tcfg)

    return train


def cmd_sweep(args, config):
    cohort = _cohort(args, config)
    if cohort.labels is None:
        raise CliError("sweep CSV must carry a 'Risk Level' column", "missing_labels")
    sw = config["sweep"]
    features = [f.strip() for f in args.features.split(",")]
    result = missing_sweep(_forest_trainer(config, args.seed), cohort, features,
                           proportions=args.proportions or sw["proportions"],
                           repetitions=args.repetitions or sw["repetitions"],
                           seed=args.seed,
                           exclude_features=sw["exclude_features"])
    _write_json(args.out, result.to_dict())
    rows = []
    for c in result.curves:
        for p, m, lo, hi in zip(c.proportions, c.mean_score, c.band_low, c.band_high):
            rows.append([c.feature, p, m, lo, hi])
    _write_csv_rows(str(args.out) + ".csv",
                    ["feature", "proportion", "mean_score", "band_low", "band_high"], rows)
    print(json.dumps({"baseline": result.baseline_score, "out": str(args.out)}))
    return 0


def cmd_rfe(args, config):
    cohort = _cohort(args, config)
    if cohort.labels is None:
        raise CliError("rfe CSV must carry a 'Risk Level' column", "missing_labels")
    trace = rfe(_forest_trainer(config, args.seed), cohort, args.target_n,
                seed=args.seed)
    _write_json(args.out, trace.to_dict())
    _write_csv_rows(str(args.out) + ".csv",
                    ["n_features_remaining", "removed_feature", "weighted_precision"],
                    [[s.n_features_remaining, s.removed_feature or "",
                      s.weighted_precision] for s in trace.steps])
    print(json.dumps({"steps": len(trace.steps),
                      "plateau_size": trace.plateau_size(), "out": str(args.out)}))
    return 0


def cmd_serve(args, config):
    import uvicorn

    from .service import create_app

    bundle = ModelBundle.load(args.bundle)
    app = create_app(bundle, static_dir=args.static_dir)
    print(json.dumps({"serving": args.bundle, "port": args.port}))
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


# ---------------------------------------------------------------------------
# argument wiring
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="strokekit",
                                description="Stroke risk stratification toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, schema=True):
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--config", default=None, help="JSON config overriding defaults")
        if schema:
            sp.add_argument("--schema", default=None,
                            help="feature schema JSON (default: built-in survey schema)")

    sp = sub.add_parser("ingest", help="parse and normalize a cohort CSV")
    common(sp)
    sp.add_argument("--csv", required=True)
    sp.add_argument("--out", required=True)
    sp.set_defaults(fn=cmd_ingest)

    sp = sub.add_parser("cleanse", help="apply the cleansing rules")
    common(sp)
    sp.add_argument("--csv", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--out-schema", default=None)
    sp.set_defaults(fn=cmd_cleanse)

    sp = sub.add_parser("label", help="append the CSPP risk-level column")
    common(sp)
    sp.add_argument("--csv", required=True)
    sp.add_argument("--out", required=True)
    sp.set_defaults(fn=cmd_label)

    sp = sub.add_parser("synth", help="generate a calibrated synthetic cohort")
    common(sp, schema=False)
    sp.add_argument("--n", type=int, default=25000)
    sp.add_argument("--out", required=True)
    sp.add_argument("--out-schema", default=None)
    sp.set_defaults(fn=cmd_synth)

    sp = sub.add_parser("train", help="fit a model and write a bundle")
    common(sp)
    sp.add_argument("--kind", required=True, choices=["tree", "forest", "logit"])
    sp.add_argument("--csv", required=True)
    sp.add_argument("--out", required=True)
    sp.set_defaults(fn=cmd_train)

    sp = sub.add_parser("evaluate", help="classification and probability reports")
    common(sp)
    sp.add_argument("--bundle", required=True)
    sp.add_argument("--csv", required=True)
    sp.add_argument("--out-dir", required=True)
    sp.set_defaults(fn=cmd_evaluate)

    sp = sub.add_parser("explain", help="MDI, permutation, or SHAP exports")
    common(sp)
    sp.add_argument("--bundle", required=True)
    sp.add_argument("--csv", required=True)
    sp.add_argument("--method", required=True, choices=["mdi", "permutation", "shap"])
    sp.add_argument("--row", type=int, default=None)
    sp.add_argument("--dependence", default=None, metavar="FEATURE_A,FEATURE_B")
    sp.add_argument("--repetitions", type=int, default=10)
    sp.add_argument("--out", required=True)
    sp.set_defaults(fn=cmd_explain)

    sp = sub.add_parser("sweep", help="missing-proportion robustness sweep")
    common(sp)
    sp.add_argument("--csv", required=True)
    sp.add_argument("--features", required=True, help="comma-separated feature names")
    sp.add_argument("--proportions", type=float, nargs="*", default=None)
    sp.add_argument("--repetitions", type=int, default=None)
    sp.add_argument("--out", required=True)
    sp.set_defaults(fn=cmd_sweep)

    sp = sub.add_parser("rfe", help="recursive feature elimination trace")
    common(sp)
    sp.add_argument("--csv", required=True)
    sp.add_argument("--target-n", type=int, required=True)
    sp.add_argument("--out", required=True)
    sp.set_defaults(fn=cmd_rfe)

    sp = sub.add_parser("serve", help="run the JSON inference service")
    common(sp, schema=False)
    sp.add_argument("--bundle", required=True)
    sp.add_argument("--host", default="127.0.0.1")
    sp.add_argument("--port", type=int, default=8000)
    sp.add_argument("--static-dir", default=None)
    sp.set_defaults(fn=cmd_serve)

    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        config = load_config(args.config)
        return args.fn(args, config)
    except CliError as exc:
        print(json.dumps({"error": {"type": exc.code, "message": str(exc)}}),
              file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(json.dumps({"error": {"type": "missing_file", "message": str(exc)}}),
              file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - boundary: everything becomes a JSON error line
        print(json.dumps({"error": {"type": type(exc).__name__, "message": str(exc)}}),
              file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
