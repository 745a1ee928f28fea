"""Split conformal calibration and set membership."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import DataError

SIMPLEX_TOL = 1e-6


@dataclass(frozen=True)
class ConformalCalibration:
    q_hat: float
    alpha: float
    n_cal: int
    k: int
    score_kind: str = "custom"


def conformal_quantile(scores, alpha: float, score_kind: str = "custom") -> ConformalCalibration:
    """``k``-th smallest calibration score with ``k = ceil((1 - alpha)(n + 1))``.

    Returns ``q_hat = inf`` when ``k > n``.
    """
    scores = np.asarray(scores, dtype=float).ravel()
    n = len(scores)
    if n == 0:
        raise DataError("no calibration scores")
    if not np.all(np.isfinite(scores)):
        raise DataError("calibration scores must be finite")
    if not 0 < alpha < 1:
        raise DataError("alpha must lie in (0, 1)")
    # round away float noise such as 0.9 * 10 = 9.000000000000002
    k = math.ceil(round((1.0 - alpha) * (n + 1), 9))
    q = math.inf if k > n else float(np.sort(scores, kind="stable")[k - 1])
    return ConformalCalibration(q_hat=q, alpha=alpha, n_cal=n, k=k, score_kind=score_kind)


def abs_residual_score(prediction, y):
    return np.abs(np.asarray(y, dtype=float) - np.asarray(prediction, dtype=float))


def interval_covers(prediction, q_hat: float, y):
    """Coverage indicator of ``[prediction - q_hat, prediction + q_hat]``."""
    if math.isinf(q_hat):
        return np.ones(np.shape(np.asarray(y)), dtype=np.int64) if np.ndim(y) else 1
    out = abs_residual_score(prediction, y) <= q_hat
    return out.astype(np.int64) if np.ndim(out) else int(out)


def interval_size(q_hat: float, n: int) -> np.ndarray:
    return np.full(n, 2.0 * q_hat)


def _check_simplex(probs):
    probs = np.asarray(probs, dtype=float)
    if np.any(probs < -SIMPLEX_TOL) or np.any(np.abs(probs.sum(axis=-1) - 1.0) > SIMPLEX_TOL):
        raise DataError("probabilities must lie on the simplex")
    return probs


def neg_likelihood_score(probs, label):
    probs = _check_simplex(probs)
    if probs.ndim == 1:
        return -float(probs[label])
    return -probs[np.arange(len(probs)), np.asarray(label)]


def _cumulative_all(probs: np.ndarray) -> np.ndarray:
    # stable sort on -p keeps ascending class index among ties
    order = np.argsort(-probs, axis=-1, kind="stable")
    sorted_p = np.take_along_axis(probs, order, axis=-1)
    cums = np.cumsum(sorted_p, axis=-1)
    out = np.empty_like(probs)
    np.put_along_axis(out, order, cums, axis=-1)
    return out


def cumulative_score(probs, label):
    """Mass of all classes ranked at or above ``label`` (descending probability)."""
    probs = _check_simplex(probs)
    scores = _cumulative_all(probs)
    if probs.ndim == 1:
        return float(scores[label])
    return scores[np.arange(len(probs)), np.asarray(label)]


def class_scores(probs, score_kind: str) -> np.ndarray:
    """Score of every candidate class (last axis)."""
    probs = _check_simplex(probs)
    if score_kind == "neg_likelihood":
        return -probs
    if score_kind == "cumulative":
        return _cumulative_all(probs)
    raise DataError(f"unknown score kind {score_kind!r}")


def class_set_covers(probs, label, q_hat: float, score_kind: str):
    """Return ``(covered, cardinality)`` for the set ``{c : score(c) <= q_hat}``."""
    s = class_scores(probs, score_kind)
    members = s <= q_hat
    if s.ndim == 1:
        return int(members[label]), int(members.sum())
    label = np.asarray(label)
    return members[np.arange(len(s)), label].astype(np.int64), members.sum(axis=-1)
