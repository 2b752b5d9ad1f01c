import numpy as np
import pytest

from strokekit.bundle import BundleError, ModelBundle, cohort_fingerprint
from strokekit.cohort import Feature, FeatureSchema, NUMERICAL
from strokekit.forest import fit_forest
from strokekit.logit import LogitModel
from strokekit.rules import CsppThresholds
from strokekit.synth import generate_cohort
from strokekit.tree import TrainConfig, fit_tree


def fitted_models():
    c = generate_cohort(n=400, seed=3)
    cfg = TrainConfig(n_trees=4, max_depth=4, seed=5)
    tree = fit_tree(c, cfg)
    forest = fit_forest(c, cfg)
    logit = LogitModel(("Age", "BMI"), -1.0, np.array([0.3, -0.2]),
                       np.array([50.0, 22.0]), np.array([10.0, 3.0]))
    return c, tree, forest, logit


def test_roundtrip_bitwise(tmp_path):
    c, tree, forest, logit = fitted_models()
    for kind, model in (("tree", tree), ("forest", forest), ("logit", logit)):
        schema = c.schema if kind != "logit" else FeatureSchema(
            (Feature("Age", NUMERICAL), Feature("BMI", NUMERICAL)))
        b = ModelBundle(kind=kind, model=model, schema=schema,
                        provenance={"seed": 5, "data_fingerprint": cohort_fingerprint(c)})
        raw = b.to_bytes()
        again = ModelBundle.from_bytes(raw).to_bytes()
        assert raw == again
        p = tmp_path / f"{kind}.bundle.json"
        b.save(p)
        assert ModelBundle.load(p).to_bytes() == raw


def test_forest_predictions_survive_roundtrip():
    c, _, forest, _ = fitted_models()
    b = ModelBundle(kind="forest", model=forest, schema=c.schema)
    loaded = ModelBundle.from_bytes(b.to_bytes())
    X = c.values[:50]
    np.testing.assert_array_equal(loaded.model.predict_proba(X),
                                  forest.predict_proba(X))


def test_unknown_version_rejected():
    c, tree, _, _ = fitted_models()
    b = ModelBundle(kind="tree", model=tree, schema=c.schema)
    d = b.to_dict()
    d["format_version"] = 99
    with pytest.raises(BundleError, match="format_version"):
        ModelBundle.from_dict(d)


def test_kind_model_mismatch_rejected():
    c, tree, _, _ = fitted_models()
    with pytest.raises(BundleError, match="kind"):
        ModelBundle(kind="forest", model=tree, schema=c.schema).to_dict()


def test_thresholds_and_background_roundtrip():
    _, _, _, logit = fitted_models()
    schema = FeatureSchema((Feature("Age", NUMERICAL), Feature("BMI", NUMERICAL)))
    bg = np.array([[50.0, 21.0], [60.0, 26.0]])
    b = ModelBundle(kind="logit", model=logit, schema=schema,
                    cspp_thresholds=CsppThresholds(overweight_bmi=25.0),
                    explain_background=bg, target_class=1)
    loaded = ModelBundle.from_bytes(b.to_bytes())
    assert loaded.cspp_thresholds.overweight_bmi == 25.0
    np.testing.assert_array_equal(loaded.explain_background, bg)


def test_fingerprint_sensitive_to_values():
    a = generate_cohort(n=50, seed=1)
    b = generate_cohort(n=50, seed=2)
    assert cohort_fingerprint(a) != cohort_fingerprint(b)
    assert cohort_fingerprint(a) == cohort_fingerprint(generate_cohort(n=50, seed=1))
