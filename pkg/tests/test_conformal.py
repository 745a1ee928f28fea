import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from covaudit.conformal import (
    abs_residual_score,
    class_set_covers,
    conformal_quantile,
    cumulative_score,
    interval_covers,
    neg_likelihood_score,
)
from covaudit.data import DataError


def test_quantile_examples():
    cal = conformal_quantile(np.arange(1, 10), 0.1)
    assert (cal.k, cal.q_hat) == (9, 9.0)
    cal = conformal_quantile(np.arange(1, 10), 0.05)
    assert cal.k == 10 and math.isinf(cal.q_hat)
    scores = np.random.default_rng(0).permutation(np.arange(19.0))
    cal = conformal_quantile(scores, 0.1)
    assert cal.k == 18 and cal.q_hat == 17.0


def test_quantile_errors():
    with pytest.raises(DataError):
        conformal_quantile([], 0.1)
    with pytest.raises(DataError):
        conformal_quantile([1.0, np.nan], 0.1)
    with pytest.raises(DataError):
        conformal_quantile([1.0], 1.0)


@given(st.lists(st.floats(-100, 100), min_size=1, max_size=40), st.floats(0.01, 0.98), st.floats(0.001, 0.01))
@settings(max_examples=200, deadline=None)
def test_quantile_monotone_in_alpha(scores, alpha, step):
    assert conformal_quantile(scores, alpha + step).q_hat <= conformal_quantile(scores, alpha).q_hat


def test_residual_and_interval_examples():
    assert abs_residual_score(0, 0) == 0
    assert abs_residual_score(1.5, 2.0) == 0.5
    assert abs_residual_score(-1, 1) == 2
    assert interval_covers(0, 1, 0.5) == 1
    assert interval_covers(0, 1, 1.5) == 0
    assert interval_covers(3.0, math.inf, 1e9) == 1
    np.testing.assert_array_equal(interval_covers(np.zeros(3), math.inf, np.array([1, 2, 3])), 1)


def test_classification_scores():
    assert neg_likelihood_score([0.7, 0.3], 0) == -0.7
    assert neg_likelihood_score(np.full(4, 0.25), 2) == -0.25
    assert neg_likelihood_score([1.0, 0.0], 1) == 0.0
    assert cumulative_score([0.5, 0.3, 0.2], 1) == pytest.approx(0.8)
    assert cumulative_score([0.5, 0.3, 0.2], 0) == 0.5
    assert cumulative_score([0.5, 0.3, 0.2], 2) == pytest.approx(1.0)
    # ties ranked by class index
    assert cumulative_score([0.4, 0.4, 0.2], 0) == pytest.approx(0.4)
    assert cumulative_score([0.4, 0.4, 0.2], 1) == pytest.approx(0.8)
    with pytest.raises(DataError):
        neg_likelihood_score([0.7, 0.7], 0)


def test_class_set_examples():
    assert class_set_covers([0.8, 0.2], 0, -0.9, "neg_likelihood") == (0, 0)
    assert class_set_covers([0.8, 0.2], 1, 0.0, "neg_likelihood") == (1, 2)
    assert class_set_covers([0.7, 0.3], 0, -0.5, "neg_likelihood") == (1, 1)
    assert class_set_covers([0.7, 0.3], 1, -0.5, "neg_likelihood") == (0, 1)
    assert class_set_covers([0.7, 0.3], 1, math.inf, "cumulative") == (1, 2)
    covered, card = class_set_covers(np.array([[0.7, 0.3], [0.1, 0.9]]), [1, 1], 0.95, "cumulative")
    np.testing.assert_array_equal(covered, [0, 1])
    np.testing.assert_array_equal(card, [1, 1])


@given(st.lists(st.floats(0.01, 1), min_size=2, max_size=8), st.data())
@settings(max_examples=100, deadline=None)
def test_score_ranges(weights, data):
    p = np.array(weights) / np.sum(weights)
    label = data.draw(st.integers(0, len(p) - 1))
    assert 0 < cumulative_score(p, label) <= 1 + 1e-12
    assert -1 <= neg_likelihood_score(p, label) <= 0


def test_marginal_coverage_small_sample():
    rng = np.random.default_rng(0)
    trials, n, alpha = 4000, 19, 0.1
    covered = 0
    for _ in range(trials):
        s = rng.exponential(size=n + 1)
        covered += s[-1] <= conformal_quantile(s[:n], alpha).q_hat
    rate = covered / trials
    se = math.sqrt(0.9 * 0.1 / trials)
    assert 0.9 - 3 * se <= rate < 0.9 + 1 / (n + 1) + 3 * se
