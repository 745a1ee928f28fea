import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from covaudit.classifiers import (
    ClassifierSpec,
    fit_classifier,
    fit_constant,
    fit_forest,
    fit_gbdt,
    fit_partition,
    kmeans,
)
from covaudit.classifiers.gbdt import GBDTParams, apply_bins, bin_edges
from covaudit.data import Dataset, DataError

from conftest import make_dataset


# -- k-means ----------------------------------------------------------------

def test_kmeans_separates_two_groups():
    res = kmeans(np.array([0.0, 0.1, 10.0, 10.1]), 2, seed=0)
    assert res.labels[0] == res.labels[1] != res.labels[2] == res.labels[3]
    np.testing.assert_allclose(np.sort(res.centroids[:, 0]), [0.05, 10.05])


def test_kmeans_single_cluster_is_mean():
    pts = np.random.default_rng(0).normal(size=(30, 2))
    res = kmeans(pts, 1, seed=4)
    np.testing.assert_allclose(res.centroids[0], pts.mean(axis=0))


def test_kmeans_identical_points():
    pts = np.ones((5, 2))
    a, b = kmeans(pts, 2, seed=1), kmeans(pts, 2, seed=1)
    np.testing.assert_array_equal(a.labels, b.labels)
    np.testing.assert_array_equal(a.centroids, b.centroids)
    assert np.all(a.labels == 0)


def test_kmeans_errors():
    with pytest.raises(ValueError):
        kmeans(np.zeros((3, 1)), 4)
    with pytest.raises(ValueError):
        kmeans(np.zeros((3, 1)), 0)


# -- constant / partition -----------------------------------------------------

def test_constant_classifier():
    assert np.all(fit_constant(0.9).predict(np.zeros((4, 2))) == 0.9)
    assert np.all(fit_constant(0.5).predict(np.zeros((2, 1))) == 0.5)
    with pytest.raises(DataError):
        fit_constant(1.0)


def test_partition_laplace_smoothing():
    X = np.array([[0.0], [0.1], [10.0], [10.1]])
    model = fit_partition(X, [1, 1, 0, 0], k=2, seed=0)
    pred = model.predict(X)
    np.testing.assert_allclose(pred, [0.75, 0.75, 0.25, 0.25])


@pytest.mark.parametrize("z, expected", [(1, 2 / 3), (0, 1 / 3)])
def test_partition_single_row(z, expected):
    model = fit_partition(np.array([[0.3]]), [z])
    assert len(model.means) == 1
    assert model.predict(np.array([[5.0]]))[0] == pytest.approx(expected)


def test_partition_cluster_count_follows_training_size():
    ds = make_dataset(m=1500, d=2)
    clf = fit_classifier(ClassifierSpec("partition"), ds)
    assert clf.info["k"] == 6


def test_partition_memorizing_still_strictly_inside():
    X = np.arange(10, dtype=float)[:, None]
    z = np.array([1, 0] * 5)
    pred = fit_partition(X, z, k=10).predict(X)
    assert np.all((pred > 0) & (pred < 1))


# -- forest -------------------------------------------------------------------

def test_forest_threshold_accuracy():
    rng = np.random.default_rng(0)
    x = rng.uniform(-1, 1, 200)
    z = (x > 0).astype(int)
    model = fit_forest(x[:100, None], z[:100], seed=0)
    acc = np.mean((model.predict(x[100:, None]) > 0.5) == z[100:])
    assert acc >= 0.95


def test_forest_pure_training_set():
    model = fit_forest(np.random.default_rng(0).normal(size=(20, 2)), np.ones(20, dtype=int))
    assert np.all(model.predict(np.zeros((3, 2))) == 1.0)


def test_forest_deterministic():
    ds = make_dataset(m=150)
    spec = ClassifierSpec("forest", {"n_estimators": 30}, seed=5)
    a = fit_classifier(spec, ds).predict(ds.features)
    b = fit_classifier(spec, ds).predict(ds.features)
    assert a.tobytes() == b.tobytes()


# -- gbdt ---------------------------------------------------------------------

def test_bins_cover_all_values():
    col = np.random.default_rng(0).normal(size=1000)
    edges = bin_edges(col, 255)
    b = apply_bins(col[:, None], [edges])
    assert b.min() == 0 and b.max() <= 254
    few = bin_edges(np.array([1.0, 2.0, 2.0, 3.0]), 255)
    np.testing.assert_allclose(few, [1.5, 2.5])


def test_gbdt_constant_labels():
    X = np.random.default_rng(0).normal(size=(200, 3))
    model = fit_gbdt(X, np.ones(200), seed=0)
    assert model.info["rounds"] == 0
    assert np.all(model.predict(X) > 0.999)


def test_gbdt_learns_signal():
    rng = np.random.default_rng(1)
    X = rng.uniform(-1, 1, (600, 2))
    z = (rng.uniform(size=600) < np.where(X[:, 0] > 0, 0.95, 0.3)).astype(float)
    model = fit_gbdt(X, z, seed=0)
    pred = model.predict(np.array([[0.5, 0.0], [-0.5, 0.0]]))
    assert pred[0] > 0.85 and pred[1] < 0.45


def test_gbdt_small_training_set_uses_fixed_rounds():
    X = np.arange(10, dtype=float)[:, None]
    model = fit_gbdt(X, np.array([0, 1] * 5), seed=0)
    assert not model.info["early_stopping"]
    assert "fixed rounds" in model.info["note"]


def test_gbdt_deterministic():
    ds = make_dataset(m=300)
    spec = ClassifierSpec("gbdt", seed=3)
    a = fit_classifier(spec, ds).predict(ds.features)
    b = fit_classifier(spec, ds).predict(ds.features)
    assert a.tobytes() == b.tobytes()


# -- shared -------------------------------------------------------------------

def test_spec_validation():
    with pytest.raises(DataError):
        ClassifierSpec("svm")
    with pytest.raises(DataError):
        ClassifierSpec("forest", {"learning_rate": 0.1})
    assert ClassifierSpec("gbdt", {"max_leaves": 7}).to_dict() == {"kind": "gbdt", "params": {"max_leaves": 7}, "seed": 0}


def test_featureless_dataset():
    ds = Dataset(features=np.zeros((40, 0)), z=[1] * 30 + [0] * 10)
    for kind in ("partition", "gbdt"):
        pred = fit_classifier(ClassifierSpec(kind), ds).predict(ds.features)
        assert np.ptp(pred) == 0


@given(st.integers(0, 10_000), st.sampled_from(["constant", "partition", "gbdt"]))
@settings(max_examples=15, deadline=None)
def test_predictions_in_unit_interval(seed, kind):
    ds = make_dataset(m=60, seed=seed, p=0.7)
    clf = fit_classifier(ClassifierSpec(kind, seed=seed), ds)
    X_new = np.random.default_rng(seed + 1).normal(scale=5, size=(50, ds.features.shape[1]))
    pred = clf.predict(X_new)
    assert np.all((pred >= 0) & (pred <= 1))
