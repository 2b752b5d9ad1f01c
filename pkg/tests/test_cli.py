import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from strokekit.bundle import ModelBundle
from strokekit.cli import main
from strokekit.cohort import default_schema, ingest_csv


def run_cli(*argv):
    return main(list(argv))


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """synth -> label-bearing cohort csv + schema, shared by the CLI tests"""
    d = tmp_path_factory.mktemp("cli")
    cohort_csv = d / "cohort.csv"
    schema_json = d / "schema.json"
    rc = run_cli("synth", "--n", "900", "--seed", "7",
                 "--out", str(cohort_csv), "--out-schema", str(schema_json))
    assert rc == 0
    return d, cohort_csv, schema_json


def test_synth_output_ingestable(workspace):
    d, cohort_csv, schema_json = workspace
    c = ingest_csv(cohort_csv, default_schema())
    assert c.row_count == 900
    assert c.labels is not None and c.stroke is not None


def test_ingest_cleanse_label_pipeline(workspace, tmp_path):
    d, cohort_csv, schema_json = workspace
    normalized = tmp_path / "normalized.csv"
    assert run_cli("ingest", "--csv", str(cohort_csv), "--schema", str(schema_json),
                   "--out", str(normalized)) == 0
    cleansed = tmp_path / "cleansed.csv"
    assert run_cli("cleanse", "--csv", str(normalized), "--schema", str(schema_json),
                   "--out", str(cleansed)) == 0
    report = json.loads(Path(str(cleansed) + ".report.json").read_text())
    assert report["rows_in"] == report["rows_out"] == 900
    labeled = tmp_path / "labeled.csv"
    assert run_cli("label", "--csv", str(normalized), "--schema", str(schema_json),
                   "--out", str(labeled)) == 0
    c = ingest_csv(labeled, default_schema())
    assert set(np.unique(c.labels)) <= {0, 1, 2}


@pytest.mark.parametrize("kind", ["tree", "forest", "logit"])
def test_train_writes_loadable_bundle(workspace, tmp_path, kind):
    d, cohort_csv, schema_json = workspace
    bundle_path = tmp_path / f"{kind}.bundle.json"
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"train": {"n_trees": 5, "max_depth": 4}}))
    rc = run_cli("train", "--kind", kind, "--csv", str(cohort_csv),
                 "--schema", str(schema_json), "--out", str(bundle_path),
                 "--seed", "3", "--config", str(cfg))
    assert rc == 0
    b = ModelBundle.load(bundle_path)
    assert b.kind == kind
    assert b.provenance["seed"] == 3


def test_cli_deterministic_outputs(workspace, tmp_path):
    d, cohort_csv, schema_json = workspace
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"train": {"n_trees": 4, "max_depth": 4}}))
    out1 = tmp_path / "b1.json"
    out2 = tmp_path / "b2.json"
    for out in (out1, out2):
        assert run_cli("train", "--kind", "forest", "--csv", str(cohort_csv),
                       "--schema", str(schema_json), "--out", str(out),
                       "--seed", "11", "--config", str(cfg)) == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_evaluate_forest_and_logit(workspace, tmp_path):
    d, cohort_csv, schema_json = workspace
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"train": {"n_trees": 5, "max_depth": 5}}))
    for kind in ("forest", "logit"):
        bundle_path = tmp_path / f"{kind}.json"
        assert run_cli("train", "--kind", kind, "--csv", str(cohort_csv),
                       "--schema", str(schema_json), "--out", str(bundle_path),
                       "--config", str(cfg)) == 0
        out_dir = tmp_path / f"eval_{kind}"
        assert run_cli("evaluate", "--bundle", str(bundle_path),
                       "--csv", str(cohort_csv), "--schema", str(schema_json),
                       "--out-dir", str(out_dir)) == 0
        report = json.loads((out_dir / "classification_report.json").read_text())
        assert 0.0 <= report["accuracy"] <= 1.0
        # averaging identities hold exactly in the emitted report
        total = sum(c["support"] for c in report["classes"])
        weighted = sum(c["precision"] * c["support"] for c in report["classes"]) / total
        assert report["weighted_avg"]["precision"] == pytest.approx(weighted, abs=1e-12)
        macro = sum(c["recall"] for c in report["classes"]) / len(report["classes"])
        assert report["macro_avg"]["recall"] == pytest.approx(macro, abs=1e-12)
        if kind == "logit":
            assert (out_dir / "coefficient_table.csv").exists()
            rg = json.loads((out_dir / "risk_group_probability.json").read_text())
            assert len(rg["levels"]) == 3


def test_explain_methods(workspace, tmp_path):
    d, cohort_csv, schema_json = workspace
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"train": {"n_trees": 4, "max_depth": 4}}))
    bundle_path = tmp_path / "forest.json"
    assert run_cli("train", "--kind", "forest", "--csv", str(cohort_csv),
                   "--schema", str(schema_json), "--out", str(bundle_path),
                   "--config", str(cfg)) == 0

    mdi_out = tmp_path / "mdi.json"
    assert run_cli("explain", "--bundle", str(bundle_path), "--csv", str(cohort_csv),
                   "--schema", str(schema_json), "--method", "mdi",
                   "--out", str(mdi_out)) == 0
    imp = json.loads(mdi_out.read_text())["importances"]
    assert sum(imp.values()) == pytest.approx(1.0, abs=1e-9)

    shap_out = tmp_path / "row0.json"
    assert run_cli("explain", "--bundle", str(bundle_path), "--csv", str(cohort_csv),
                   "--schema", str(schema_json), "--method", "shap", "--row", "0",
                   "--out", str(shap_out)) == 0
    payload = json.loads(shap_out.read_text())
    b = ModelBundle.load(bundle_path)
    cohort = ingest_csv(cohort_csv, default_schema())
    row = cohort.select_columns(list(b.schema.names)).values[0]
    fx = b.model.predict_proba(row[None, :])[0, b.target_class]
    total = payload["base_value"] + sum(payload["contributions"].values())
    assert abs(total - fx) < 1e-9

    perm_out = tmp_path / "perm.json"
    assert run_cli("explain", "--bundle", str(bundle_path), "--csv", str(cohort_csv),
                   "--schema", str(schema_json), "--method", "permutation",
                   "--repetitions", "2", "--out", str(perm_out)) == 0
    rep = json.loads(perm_out.read_text())
    assert len(rep["features"]) == len(b.schema.names)


def test_sweep_and_rfe_outputs(workspace, tmp_path):
    d, cohort_csv, schema_json = workspace
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"train": {"n_trees": 4, "max_depth": 4}}))
    sweep_out = tmp_path / "sweep.json"
    assert run_cli("sweep", "--csv", str(cohort_csv), "--schema", str(schema_json),
                   "--features", "Systolic Blood Pressure",
                   "--proportions", "0.2", "0.8", "--repetitions", "3",
                   "--out", str(sweep_out), "--config", str(cfg)) == 0
    data = json.loads(sweep_out.read_text())
    assert data["curves"][0]["feature"] == "Systolic Blood Pressure"
    assert Path(str(sweep_out) + ".csv").exists()

    # rfe on a reduced schema for speed
    small = tmp_path / "small.csv"
    cohort = ingest_csv(cohort_csv, default_schema())
    keep = ["BMI", "Systolic Blood Pressure", "HDL", "Age", "Hypertension"]
    sub = cohort.select_columns(keep)
    from strokekit.cohort import write_csv

    write_csv(sub, small)
    small_schema = tmp_path / "small.schema.json"
    sub.schema.save(small_schema)
    rfe_out = tmp_path / "rfe.json"
    assert run_cli("rfe", "--csv", str(small), "--schema", str(small_schema),
                   "--target-n", "2", "--out", str(rfe_out), "--config", str(cfg)) == 0
    trace = json.loads(rfe_out.read_text())
    assert len(trace["steps"]) == 4


def test_unknown_flag_exits_nonzero():
    assert run_cli("train", "--bogus") != 0


def test_missing_file_machine_readable_error(tmp_path, capsys):
    rc = run_cli("ingest", "--csv", str(tmp_path / "nope.csv"),
                 "--out", str(tmp_path / "out.csv"))
    assert rc == 2
    err = capsys.readouterr().err.strip().splitlines()[-1]
    payload = json.loads(err)
    assert payload["error"]["type"] == "missing_file"


def test_schema_mismatch_error(workspace, tmp_path, capsys):
    d, cohort_csv, schema_json = workspace
    bad = tmp_path / "bad.csv"
    bad.write_text("A,B\n1,2\n")
    rc = run_cli("ingest", "--csv", str(bad), "--schema", str(schema_json),
                 "--out", str(tmp_path / "o.csv"))
    assert rc == 1
    payload = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert "error" in payload


def test_console_entrypoint_runs():
    proc = subprocess.run([sys.executable, "-m", "strokekit.cli", "--help"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "strokekit" in proc.stdout
