import numpy as np
import pytest

from strokekit.bundle import ModelBundle
from strokekit.cohort import Cohort, Feature, FeatureSchema, NUMERICAL, split_stratified
from strokekit.forest import (
    ForestModel,
    _fit_one_tree,
    bootstrap_indices,
    fit_forest,
    mdi_importance,
    oob_accuracy,
    predict_forest,
    subsample_size,
)
from strokekit.tree import TrainConfig, TreeModel, fit_tree
from strokekit.synth import generate_cohort
from strokekit.rules import factors_cohort


def cohort_from(X, y):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    schema = FeatureSchema(tuple(Feature(f"x{j}", NUMERICAL) for j in range(X.shape[1])))
    return Cohort(schema, X, labels=np.asarray(y, dtype=np.int64))


def random_cohort(rng, n=200, f=5, k=3):
    X = rng.normal(size=(n, f))
    y = ((X[:, 0] > 0).astype(int) + (X[:, 1] > 0.5).astype(int))
    return cohort_from(X, y)


def test_degenerate_forest_equals_single_tree():
    rng = np.random.default_rng(3)
    c = random_cohort(rng)
    cfg = TrainConfig(n_trees=1, feature_subsample_size=5, bootstrap=False, max_depth=6)
    fo = fit_forest(c, cfg)
    t = fit_tree(c, cfg)
    only = fo.trees[0]
    assert np.array_equal(only.feature, t.feature)
    assert np.array_equal(only.threshold, t.threshold)
    assert np.array_equal(only.class_counts, t.class_counts)


def test_same_seed_bit_identical():
    rng = np.random.default_rng(5)
    c = random_cohort(rng)
    cfg = TrainConfig(n_trees=8, max_depth=5, seed=77)
    a = fit_forest(c, cfg)
    b = fit_forest(c, cfg)
    pa = ModelBundle(kind="forest", model=a, schema=c.schema).to_bytes()
    pb = ModelBundle(kind="forest", model=b, schema=c.schema).to_bytes()
    assert pa == pb


def test_trees_schedule_independent():
    # tree i of a forest equals the tree built alone from its derived seed
    rng = np.random.default_rng(7)
    c = random_cohort(rng, n=120)
    cfg = TrainConfig(n_trees=5, max_depth=4, seed=13)
    fo = fit_forest(c, cfg)
    X = np.ascontiguousarray(c.values)
    y = np.ascontiguousarray(c.labels)
    for i in (0, 2, 4):
        alone = _fit_one_tree(X, y, fo.n_classes, cfg, fo.tree_seeds[i],
                              fo.feature_subsample_size)
        assert np.array_equal(alone.feature, fo.trees[i].feature)
        assert np.array_equal(alone.threshold, fo.trees[i].threshold)


def test_averaging_of_tree_probabilities():
    leaf_a = TreeModel([-1], [-1], [-1], [0.0], [10], [[10, 0]], [0.0], 2, 1, TrainConfig())
    leaf_b = TreeModel([-1], [-1], [-1], [0.0], [10], [[0, 10]], [0.0], 2, 1, TrainConfig())
    fo = ForestModel((leaf_a, leaf_b), (1, 2), 1, 2, 1, TrainConfig())
    assert predict_forest(fo, [0.0]).tolist() == [0.5, 0.5]


def test_unanimous_pure_leaves_one_hot():
    leaf = TreeModel([-1], [-1], [-1], [0.0], [5], [[5, 0]], [0.0], 2, 1, TrainConfig())
    fo = ForestModel((leaf, leaf, leaf), (1, 2, 3), 1, 2, 1, TrainConfig())
    assert predict_forest(fo, [3.0]).tolist() == [1.0, 0.0]


def test_probability_averaging_is_canonical_not_majority_vote():
    # two mild class-0 trees vs one confident class-1 tree: per-tree majority
    # vote would say class 0, probability averaging says class 1
    mild = TreeModel([-1], [-1], [-1], [0.0], [10], [[6, 4]], [0.48], 2, 1, TrainConfig())
    confident = TreeModel([-1], [-1], [-1], [0.0], [10], [[1, 9]], [0.18], 2, 1, TrainConfig())
    fo = ForestModel((mild, mild, confident), (1, 2, 3), 1, 2, 1, TrainConfig())
    proba = predict_forest(fo, [0.0])
    np.testing.assert_allclose(proba, [(0.6 + 0.6 + 0.1) / 3, (0.4 + 0.4 + 0.9) / 3])
    votes = [int(np.argmax(t.predict_proba(np.zeros((1, 1)))[0])) for t in fo.trees]
    assert votes == [0, 0, 1]          # majority vote would pick class 0
    assert int(np.argmax(proba)) == 1  # canonical averaged prediction


def test_bootstrap_indices_reproducible():
    a = bootstrap_indices(987, 50)
    b = bootstrap_indices(987, 50)
    assert np.array_equal(a, b)
    assert a.min() >= 0 and a.max() < 50 and len(a) == 50


def test_subsample_size_default_sqrt():
    assert subsample_size(10, TrainConfig()) == 4
    assert subsample_size(34, TrainConfig()) == 6
    assert subsample_size(10, TrainConfig(feature_subsample_size=3)) == 3
    with pytest.raises(ValueError):
        subsample_size(4, TrainConfig(feature_subsample_size=9))


def test_oob_accuracy_close_to_heldout():
    cohort = generate_cohort(n=625, seed=19)
    fc = factors_cohort(cohort)
    train, test = split_stratified(fc, 0.2, seed=19)
    cfg = TrainConfig(n_trees=50, max_depth=6, seed=19)
    fo = fit_forest(train, cfg)
    oob = oob_accuracy(fo, train)
    pred = np.argmax(fo.predict_proba(test.values), axis=1)
    heldout = float(np.mean(pred == test.labels))
    assert abs(oob - heldout) < 0.05


def test_forest_mdi_sums_to_one():
    rng = np.random.default_rng(9)
    c = random_cohort(rng)
    fo = fit_forest(c, TrainConfig(n_trees=10, max_depth=5, seed=1))
    imp = mdi_importance(fo)
    assert imp.sum() == pytest.approx(1.0, abs=1e-9)
    assert (imp >= 0).all()


def test_forest_probabilities_sum_to_one():
    rng = np.random.default_rng(11)
    c = random_cohort(rng)
    fo = fit_forest(c, TrainConfig(n_trees=7, max_depth=5, seed=2))
    p = fo.predict_proba(rng.normal(size=(50, 5)))
    np.testing.assert_allclose(p.sum(axis=1), 1.0, atol=1e-12)


def test_forest_bit_identical_across_backends(monkeypatch):
    # the numpy fallback kernel must grow the exact same trees as the active
    # backend (both compare identical IEEE split scores from int64 counts)
    from strokekit import _accel

    rng = np.random.default_rng(13)
    c = random_cohort(rng, n=300, f=6)
    cfg = TrainConfig(n_trees=6, max_depth=6, seed=21)
    active = fit_forest(c, cfg)
    monkeypatch.setattr(_accel, "best_split_gini", _accel._best_split_gini_py)
    monkeypatch.setattr(_accel, "route_leaves", _accel._route_leaves_py)
    fallback = fit_forest(c, cfg)
    pa = ModelBundle(kind="forest", model=active, schema=c.schema).to_bytes()
    pb = ModelBundle(kind="forest", model=fallback, schema=c.schema).to_bytes()
    assert pa == pb
