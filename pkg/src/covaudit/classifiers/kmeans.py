"""Seeded k-means (k-means++ init, Lloyd iterations)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MAX_ITER = 100
TOL = 1e-4


@dataclass(frozen=True)
class KMeansResult:
    centroids: np.ndarray
    labels: np.ndarray
    n_iter: int

    def predict(self, points: np.ndarray) -> np.ndarray:
        return nearest(np.asarray(points, dtype=float), self.centroids)


def _sq_dists(points, centroids):
    # (n, k) squared euclidean distances
    d = (
        np.sum(points**2, axis=1)[:, None]
        - 2.0 * points @ centroids.T
        + np.sum(centroids**2, axis=1)[None, :]
    )
    return np.maximum(d, 0.0)


def nearest(points, centroids) -> np.ndarray:
    """Index of the nearest centroid; ties go to the lowest index."""
    if points.shape[1] == 0:
        return np.zeros(len(points), dtype=np.int64)
    return np.argmin(_sq_dists(points, centroids), axis=1)


def _plus_plus(points, k, rng):
    n = len(points)
    centroids = np.empty((k, points.shape[1]))
    centroids[0] = points[rng.integers(n)]
    closest = _sq_dists(points, centroids[:1])[:, 0]
    for c in range(1, k):
        total = closest.sum()
        if total > 0:
            idx = int(np.searchsorted(np.cumsum(closest), rng.random() * total, side="right"))
            idx = min(idx, n - 1)
        else:
            idx = int(rng.integers(n))
        centroids[c] = points[idx]
        closest = np.minimum(closest, _sq_dists(points, centroids[c : c + 1])[:, 0])
    return centroids


def kmeans(points, k: int, seed: int = 0) -> KMeansResult:
    """Cluster ``points`` into ``k`` groups.

    Empty clusters are re-seeded at the point farthest from its current
    centroid (lowest index on ties). Stops when the largest centroid shift
    drops below ``1e-4`` or after 100 iterations.
    """
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points[:, None]
    n = len(points)
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > n:
        raise ValueError(f"k={k} exceeds the number of points ({n})")
    rng = np.random.default_rng(seed)
    centroids = _plus_plus(points, k, rng)
    labels = nearest(points, centroids)
    n_iter = 0
    for n_iter in range(1, MAX_ITER + 1):
        new = np.empty_like(centroids)
        counts = np.bincount(labels, minlength=k)
        for c in range(k):
            if counts[c]:
                new[c] = points[labels == c].mean(axis=0)
        empty = np.flatnonzero(counts == 0)
        if len(empty):
            own = np.sum((points - _fill_empty(new, centroids, counts)[labels]) ** 2, axis=1)
            for c in empty:
                far = int(np.argmax(own))
                new[c] = points[far]
                own[far] = -1.0
        shift = np.max(np.sqrt(np.sum((new - centroids) ** 2, axis=1)))
        centroids = new
        labels = nearest(points, centroids)
        if shift < TOL:
            break
    return KMeansResult(centroids=centroids, labels=labels, n_iter=n_iter)


def _fill_empty(new, old, counts):
    out = new.copy()
    out[counts == 0] = old[counts == 0]
    return out
