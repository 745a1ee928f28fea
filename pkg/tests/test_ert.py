import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from covaudit.classifiers import ClassifierSpec
from covaudit.data import Dataset, make_folds
from covaudit.ert import ert_from_predictions, ert_kfold, ert_oracle, ert_terms
from covaudit.scores import BRIER, L1, LOG_LOSS, get_score

from conftest import make_dataset


def test_terms_l1_example():
    terms = ert_terms(L1, [0.9, 0.9, 0.9, 0.1], [1, 1, 1, 0], 0.9)
    np.testing.assert_allclose(terms, [0, 0, 0, 0.9], atol=1e-15)
    assert terms.mean() == pytest.approx(0.225)


def test_terms_brier_example():
    assert ert_terms(BRIER, [1.0], [1], 0.9)[0] == pytest.approx(0.01)


def test_terms_vanish_at_target():
    z = np.random.default_rng(0).integers(0, 2, 50)
    for score in (L1, BRIER, LOG_LOSS):
        assert np.all(ert_terms(score, np.full(50, 0.9), z, 0.9) == 0)


def test_terms_length_mismatch():
    with pytest.raises(ValueError):
        ert_terms(L1, [0.5, 0.5], [1], 0.9)


def test_oracle_examples():
    assert ert_oracle(L1, 0.9, [0.7, 1.0]) == pytest.approx(0.15, abs=1e-15)
    assert ert_oracle(BRIER, 0.9, np.full(10, 0.9)) == 0
    assert ert_oracle(BRIER, 0.9, [0.7, 1.0]) == pytest.approx((0.04 + 0.01) / 2)


@pytest.mark.parametrize("name", ["l1", "l2", "kl"])
def test_constant_classifier_is_exactly_zero(name):
    ds = make_dataset(m=123)
    rep = ert_kfold(ds, ClassifierSpec("constant"), get_score(name), k=5, seed=1)
    assert rep.value == 0 and rep.std_err == 0
    assert np.all(rep.per_fold == 0)


@pytest.mark.parametrize("kind", ["partition", "gbdt"])
def test_report_identities(kind):
    ds = make_dataset(m=301, seed=4, p=0.8)
    for score in (L1, BRIER, LOG_LOSS):
        rep = ert_kfold(ds, ClassifierSpec(kind), score, k=5, seed=2)
        assert rep.value == pytest.approx(rep.per_fold.mean(), abs=1e-12)
        assert rep.over + rep.under == pytest.approx(rep.value, abs=1e-10)


@given(st.integers(0, 2**31), st.integers(10, 80), st.sampled_from(["l1", "l2", "kl"]))
@settings(max_examples=100, deadline=None)
def test_decomposition_on_random_predictions(seed, m, name):
    rng = np.random.default_rng(seed)
    h = rng.uniform(size=m)
    z = rng.integers(0, 2, m)
    targets = rng.uniform(0.5, 0.99, m)
    folds = make_folds(m, 5, seed)
    rep = ert_from_predictions(get_score(name), h, z, targets, folds)
    assert rep.over + rep.under == pytest.approx(rep.value, abs=1e-10)
    terms = ert_terms(get_score(name), h, z, targets)
    assert rep.std_err == pytest.approx(terms.std(ddof=1) / np.sqrt(m))
    assert rep.pooled_mean == pytest.approx(terms.mean())


def test_unweighted_fold_mean():
    h = np.array([1.0, 1.0, 1.0, 0.9, 0.9])
    z = np.array([1, 1, 0, 1, 0])
    folds = make_folds(5, 2, 0)
    rep = ert_from_predictions(BRIER, h, z, 0.9, folds)
    terms = ert_terms(BRIER, h, z, 0.9)
    expected = np.mean([terms[folds.fold_of_row == j].mean() for j in range(2)])
    assert rep.value == pytest.approx(expected, abs=1e-15)


def test_permutation_invariance_with_fixed_folds():
    ds = make_dataset(m=200, seed=9, p=0.8)
    folds = make_folds(ds.m, 5, 3)
    spec = ClassifierSpec("partition", seed=0)
    base = ert_kfold(ds, spec, BRIER, folds=folds)
    # shuffle rows inside each fold; the training sets stay the same sets
    perm = np.random.default_rng(1).permutation(ds.m)
    perm = perm[np.argsort(folds.fold_of_row[perm], kind="stable")]
    shuffled_folds = type(folds)(folds.fold_of_row[perm], folds.k, folds.seed)
    moved = ert_kfold(ds.subset(perm), spec, BRIER, folds=shuffled_folds)
    assert moved.value == pytest.approx(base.value, abs=1e-12)


def test_per_row_targets_equal_constant_alpha():
    ds = make_dataset(m=200, seed=2)
    with_col = Dataset(features=ds.features, z=ds.z, alpha_row=np.full(ds.m, 0.1))
    for score in (L1, BRIER):
        a = ert_kfold(ds, ClassifierSpec("gbdt"), score, seed=0, alpha=0.1)
        b = ert_kfold(with_col, ClassifierSpec("gbdt"), score, seed=0, alpha=0.1)
        assert a.value == b.value and a.std_err == b.std_err


def test_forest_kl_clip():
    ds = make_dataset(m=120, seed=1)
    rep = ert_kfold(ds, ClassifierSpec("forest", {"n_estimators": 20}), LOG_LOSS, seed=0)
    assert np.isfinite(rep.value)
    assert rep.proxy.min() >= 1e-4 and rep.proxy.max() <= 1 - 1e-4


def test_lower_bound_against_oracle():
    # z drawn from a known p(x); the k-fold estimate must not exceed the oracle
    rng = np.random.default_rng(0)
    x = rng.uniform(-1, 1, (1500, 1))
    p = np.where(x[:, 0] > 0, 0.97, 0.8)
    z = (rng.uniform(size=1500) < p).astype(int)
    ds = Dataset(features=x, z=z)
    for score in (L1, BRIER):
        rep = ert_kfold(ds, ClassifierSpec("gbdt"), score, seed=0)
        assert rep.value <= ert_oracle(score, 0.9, p) + 3 * rep.std_err
        assert rep.value > 0


@pytest.mark.slow
@pytest.mark.parametrize("kind", ["forest", "gbdt"])
def test_null_data_no_false_detection(kind):
    # z independent of x: L1-ERT must not be significantly positive
    for rep in range(3):
        g = np.random.default_rng([77, rep])
        ds = Dataset(features=g.uniform(-1, 1, (1000, 8)), z=(g.uniform(size=1000) < 0.9).astype(int))
        rep_ = ert_kfold(ds, ClassifierSpec(kind, seed=rep), L1, seed=rep)
        assert rep_.value <= 3 * rep_.std_err
