"""Probability classifiers estimating P(Z = 1 | X = x)."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field, fields
from typing import Any

import numpy as np

from ..data import DataError, Dataset, Standardizer, fit_standardizer, fourth_root_rule
from .gbdt import GBDTModel, GBDTParams, fit_gbdt
from .kmeans import KMeansResult, kmeans

KINDS = ("constant", "partition", "forest", "gbdt")
FOREST_KL_CLIP = 1e-4


def n_threads() -> int:
    """Parallelism cap from ``COVAUDIT_THREADS`` (default 1)."""
    try:
        return max(1, int(os.environ.get("COVAUDIT_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class ClassifierSpec:
    kind: str = "gbdt"
    params: dict[str, Any] = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DataError(f"unknown classifier {self.kind!r}; choose from {KINDS}")
        allowed = _ALLOWED[self.kind]
        bad = set(self.params) - allowed
        if bad:
            raise DataError(f"unknown {self.kind} hyperparameters: {sorted(bad)}")

    def to_dict(self) -> dict:
        return {"kind": self.kind, "params": dict(sorted(self.params.items())), "seed": self.seed}


_ALLOWED = {
    "constant": {"target"},
    "partition": {"k", "smoothing"},
    "forest": {"n_estimators", "max_features", "min_samples_leaf", "max_depth", "bootstrap"},
    "gbdt": {f.name for f in fields(GBDTParams)},
}


@dataclass(frozen=True)
class ConstantModel:
    target: float

    def predict(self, X, targets=None):
        if targets is not None:
            return np.asarray(targets, dtype=float).copy()
        return np.full(len(X), self.target)


@dataclass(frozen=True)
class PartitionModel:
    clusters: KMeansResult
    means: np.ndarray
    counts: np.ndarray

    def predict(self, X, targets=None):
        return self.means[self.clusters.predict(X)]


@dataclass(frozen=True)
class ForestModel:
    estimator: Any
    constant: float | None = None

    def predict(self, X, targets=None):
        if self.constant is not None:
            return np.full(len(X), self.constant)
        proba = self.estimator.predict_proba(X)
        return proba[:, list(self.estimator.classes_).index(1)]


@dataclass(frozen=True)
class GBDTWrapper:
    model: GBDTModel

    def predict(self, X, targets=None):
        return self.model.predict(X)


@dataclass(frozen=True)
class TrainedClassifier:
    """Fitted predictor mapping raw feature rows to probabilities in [0, 1]."""

    spec: ClassifierSpec
    standardizer: Standardizer
    model: Any
    info: dict = field(default_factory=dict)

    def design(self, features) -> np.ndarray:
        X = self.standardizer.transform(features)
        return X if X.shape[1] else np.zeros((len(X), 1))

    def predict(self, features, targets=None) -> np.ndarray:
        p = self.model.predict(self.design(features), targets)
        return np.clip(p, 0.0, 1.0)


def fit_constant(target: float) -> ConstantModel:
    if not 0 < target < 1:
        raise DataError("target must lie in (0, 1)")
    return ConstantModel(float(target))


def fit_partition(X, z, k: int | None = None, seed: int = 0, smoothing: bool = True) -> PartitionModel:
    """Cluster-mean classifier.

    Defaults to ``floor(m ** 0.25)`` clusters of the training rows and the
    Laplace-smoothed mean ``(sum z + 1) / (count + 2)`` per cluster.
    """
    X = np.asarray(X, dtype=float)
    z = np.asarray(z, dtype=float)
    m = len(z)
    if m < 1:
        raise DataError("empty training set")
    k = fourth_root_rule(m) if k is None else int(k)
    k = max(1, min(k, m))
    clusters = kmeans(X, k, seed=seed)
    counts = np.bincount(clusters.labels, minlength=k).astype(float)
    sums = np.bincount(clusters.labels, weights=z, minlength=k)
    if smoothing:
        means = (sums + 1.0) / (counts + 2.0)
    else:
        means = np.divide(sums, counts, out=np.full(k, z.mean()), where=counts > 0)
    return PartitionModel(clusters=clusters, means=means, counts=counts)


def fit_forest(X, z, seed: int = 0, n_estimators: int = 300, max_features=None,
               min_samples_leaf: int = 1, max_depth=None, bootstrap: bool = True) -> ForestModel:
    from sklearn.ensemble import RandomForestClassifier

    X = np.asarray(X, dtype=float)
    z = np.asarray(z, dtype=np.int64)
    if len(z) == 0:
        raise DataError("empty training set")
    if np.all(z == z[0]):
        return ForestModel(estimator=None, constant=float(z[0]))
    if max_features is None:
        max_features = int(math.ceil(math.sqrt(X.shape[1])))
    est = RandomForestClassifier(
        n_estimators=n_estimators,
        criterion="gini",
        max_features=max_features,
        min_samples_leaf=min_samples_leaf,
        max_depth=max_depth,
        bootstrap=bootstrap,
        random_state=seed,
        n_jobs=n_threads(),
    )
    est.fit(X, z)
    return ForestModel(estimator=est)


def fit_classifier(spec: ClassifierSpec, train: Dataset, target: float = 0.9, seed: int | None = None) -> TrainedClassifier:
    """Fit ``spec`` on ``train`` (design matrix built from the training rows only)."""
    seed = spec.seed if seed is None else seed
    # canonical row order: the fit depends on the training rows as a set
    order = np.lexsort(np.column_stack([train.features, train.z]).T[::-1])
    train = train.subset(order)
    std = fit_standardizer(train)
    shell = TrainedClassifier(spec=spec, standardizer=std, model=None)
    X = shell.design(train.features)
    params = dict(spec.params)
    info: dict = {}
    if spec.kind == "constant":
        model = fit_constant(params.get("target", target))
    elif spec.kind == "partition":
        model = fit_partition(X, train.z, k=params.get("k"), seed=seed, smoothing=params.get("smoothing", True))
        info["k"] = len(model.means)
    elif spec.kind == "forest":
        model = fit_forest(X, train.z, seed=seed, **params)
    else:
        gbdt = fit_gbdt(X, train.z, GBDTParams(**params), seed=seed)
        model = GBDTWrapper(gbdt)
        info.update(gbdt.info)
    return TrainedClassifier(spec=spec, standardizer=std, model=model, info=info)


__all__ = [
    "KINDS",
    "ClassifierSpec",
    "TrainedClassifier",
    "fit_classifier",
    "fit_constant",
    "fit_partition",
    "fit_forest",
    "fit_gbdt",
    "kmeans",
    "GBDTParams",
    "FOREST_KL_CLIP",
    "n_threads",
]
