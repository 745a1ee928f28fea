"""Excess risk of the target coverage (ERT): k-fold estimation and oracle values."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .classifiers import FOREST_KL_CLIP, ClassifierSpec, fit_classifier
from .data import DataError, Dataset, FoldAssignment, make_folds
from .scores import ProperScore, divergence, split_over_under


class FoldError(RuntimeError):
    def __init__(self, fold: int, cause: Exception):
        super().__init__(f"classifier failed on fold {fold}: {cause}")
        self.fold = fold


@dataclass(frozen=True)
class ERTReport:
    score: str
    value: float
    per_fold: np.ndarray
    std_err: float
    over: float
    under: float
    pooled_mean: float
    proxy: np.ndarray | None = None

    def to_dict(self) -> dict:
        return {
            "value": float(self.value),
            "std_err": float(self.std_err),
            "per_fold": [float(v) for v in self.per_fold],
            "over": float(self.over),
            "under": float(self.under),
            "pooled_mean": float(self.pooled_mean),
        }


def ert_terms(score: ProperScore, h, z, targets) -> np.ndarray:
    """Per-sample ``score(target_i, z_i) - score(h_i, z_i)``."""
    h = np.asarray(h, dtype=float)
    z = np.asarray(z, dtype=float)
    targets = np.broadcast_to(np.asarray(targets, dtype=float), h.shape)
    if h.shape != z.shape:
        raise DataError(f"length mismatch: {h.shape} predictions vs {z.shape} indicators")
    return np.asarray(score(targets, z, targets)) - np.asarray(score(h, z, targets))


def _fold_means(terms, folds: FoldAssignment) -> np.ndarray:
    return np.array([terms[folds.fold_of_row == j].mean() for j in range(folds.k)])


def ert_from_predictions(score: ProperScore, h, z, targets, folds: FoldAssignment) -> ERTReport:
    """Aggregate out-of-fold predictions into an :class:`ERTReport`.

    The estimate is the unweighted mean of the fold means. ``std_err`` is the
    sample standard deviation of all per-sample terms over ``sqrt(m)``.
    """
    terms = ert_terms(score, h, z, targets)
    per_fold = _fold_means(terms, folds)
    over_score, under_score = split_over_under(score)
    over = _fold_means(ert_terms(over_score, h, z, targets), folds).mean()
    under = _fold_means(ert_terms(under_score, h, z, targets), folds).mean()
    m = len(terms)
    std_err = float(terms.std(ddof=1) / np.sqrt(m)) if m > 1 else 0.0
    return ERTReport(
        score=score.name,
        value=float(per_fold.mean()),
        per_fold=per_fold,
        std_err=std_err,
        over=float(over),
        under=float(under),
        pooled_mean=float(terms.mean()),
        proxy=np.asarray(h, dtype=float),
    )


def fold_seed(seed: int, fold: int) -> int:
    return int(np.random.SeedSequence([seed, fold]).generate_state(1)[0])


def out_of_fold_predictions(dataset: Dataset, spec: ClassifierSpec, folds: FoldAssignment, alpha: float = 0.1):
    """Predict every row with a classifier fit on the other folds.

    Returns ``(h, infos)`` with one info dict per fold.
    """
    h = np.empty(dataset.m)
    targets = dataset.targets(alpha)
    infos = []
    for j in range(folds.k):
        val = folds.indices(j)
        train = np.flatnonzero(folds.fold_of_row != j)
        try:
            clf = fit_classifier(spec, dataset.subset(train), target=1.0 - alpha, seed=fold_seed(spec.seed, j))
            h[val] = clf.predict(dataset.features[val], targets=targets[val] if spec.kind == "constant" else None)
        except Exception as exc:
            raise FoldError(j, exc) from exc
        infos.append(clf.info)
    return h, infos


def prediction_clip(spec: ClassifierSpec, score: ProperScore) -> float:
    return FOREST_KL_CLIP if spec.kind == "forest" and score.name == "kl" else 0.0


def clip_predictions(h, eps: float):
    return np.clip(h, eps, 1.0 - eps) if eps > 0 else h


def ert_kfold(dataset: Dataset, spec: ClassifierSpec, score: ProperScore, k: int = 5, seed: int = 0,
              alpha: float = 0.1, folds: FoldAssignment | None = None) -> ERTReport:
    """k-fold ERT estimate of ``score`` for the coverage indicators in ``dataset``."""
    if folds is None:
        folds = make_folds(dataset.m, k, seed)
    h, _ = out_of_fold_predictions(dataset, spec, folds, alpha)
    h = clip_predictions(h, prediction_clip(spec, score))
    return ert_from_predictions(score, h, dataset.z, dataset.targets(alpha), folds)


def ert_oracle(score: ProperScore, target, p_samples) -> float:
    """Population ERT ``mean_i d(target, p_i)`` under known conditional coverage."""
    p = np.asarray(p_samples, dtype=float)
    return float(np.mean(divergence(score, np.broadcast_to(target, p.shape), p, target)))
