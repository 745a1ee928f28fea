"""Established conditional coverage diagnostics.

Group metrics (CovGap, WCovGap, FSC, SSC, EOC), worst-case slab coverage,
and dependence measures between coverage and set size (Pearson, HSIC).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from numba import njit

from .classifiers import kmeans
from .data import DataError, fourth_root_rule


@dataclass(frozen=True)
class GroupAssignment:
    group_of_row: np.ndarray
    group_count: int
    source: str = "user-supplied"


def kmeans_groups(design: np.ndarray, k: int | None = None, seed: int = 0) -> GroupAssignment:
    """Feature-space groups from k-means (fourth-root rule when ``k`` is None)."""
    design = np.asarray(design, dtype=float)
    if design.ndim == 1:
        design = design[:, None]
    k = fourth_root_rule(len(design)) if k is None else min(int(k), len(design))
    res = kmeans(design, k, seed=seed)
    return GroupAssignment(res.labels, k, "feature-kmeans")


def quantile_groups(values, bins: int = 5, source: str = "quantile") -> GroupAssignment:
    """Bin ``values`` into at most ``bins`` quantile groups.

    Duplicate cut points collapse, so constant values form a single group.
    """
    values = np.asarray(values, dtype=float)
    if bins < 1:
        raise ValueError("bins must be >= 1")
    cuts = np.unique(np.quantile(values, np.linspace(0, 1, bins + 1)[1:-1]))
    raw = np.searchsorted(cuts, values, side="left")
    ids, groups = np.unique(raw, return_inverse=True)
    return GroupAssignment(groups, len(ids), source)


def _as_groups(groups) -> np.ndarray:
    if isinstance(groups, GroupAssignment):
        return np.asarray(groups.group_of_row)
    return np.asarray(groups)


def group_coverages(z, groups) -> tuple[np.ndarray, np.ndarray]:
    """Per-group empirical coverage and count, for non-empty groups only."""
    z = np.asarray(z, dtype=float)
    g = _as_groups(groups)
    if g.shape != z.shape:
        raise DataError("z and groups must have the same length")
    ids, inverse = np.unique(g, return_inverse=True)
    if isinstance(groups, GroupAssignment) and len(ids) < groups.group_count:
        warnings.warn(f"{groups.group_count - len(ids)} empty group(s) dropped", stacklevel=2)
    counts = np.bincount(inverse)
    cov = np.bincount(inverse, weights=z) / counts
    return cov, counts


def covgap(z, groups, target: float) -> float:
    cov, _ = group_coverages(z, groups)
    return float(np.mean(np.abs(cov - target)))


def wcovgap(z, groups, target: float) -> float:
    cov, counts = group_coverages(z, groups)
    return float(np.sum(counts / counts.sum() * np.abs(cov - target)))


def fsc(z, groups) -> float:
    cov, _ = group_coverages(z, groups)
    return float(cov.min())


def ssc(z, set_size, target: float, bins: int = 5) -> float:
    """CovGap over quantile bins of the prediction-set size."""
    if set_size is None:
        raise DataError("ssc requires set sizes")
    return covgap(z, quantile_groups(set_size, bins, "size-quantile"), target)


def eoc(z, y, target: float, bins: int = 5) -> float:
    """Largest per-bin coverage gap over quantile bins of the response."""
    if y is None:
        raise DataError("eoc requires the response y")
    cov, _ = group_coverages(z, quantile_groups(y, bins, "y-quantile"))
    return float(np.max(np.abs(cov - target)))


# -- worst-case slab coverage -----------------------------------------------

@njit(cache=True)
def _min_window_mean(zs, min_len):
    # The minimum mean over windows of length >= L is attained by a window of
    # length < 2L (a longer one splits into two parts each of length >= L).
    n = zs.shape[0]
    prefix = np.zeros(n + 1)
    for i in range(n):
        prefix[i + 1] = prefix[i] + zs[i]
    best = 2.0
    max_len = min(n, 2 * min_len - 1)
    for start in range(n - min_len + 1):
        stop = min(n, start + max_len)
        for end in range(start + min_len, stop + 1):
            v = (prefix[end] - prefix[start]) / (end - start)
            if v < best:
                best = v
    return best


@njit(cache=True)
def _wsc_directions(design, z, directions, min_len):
    best = 2.0
    for j in range(directions.shape[0]):
        proj = design @ directions[j]
        order = np.argsort(proj, kind="mergesort")
        v = _min_window_mean(z[order], min_len)
        if v < best:
            best = v
    return best


def random_directions(d: int, n_directions: int, seed: int) -> np.ndarray:
    """Unit vectors uniform on the sphere (normalized Gaussians)."""
    rng = np.random.default_rng(seed)
    v = rng.standard_normal((n_directions, d))
    norms = np.linalg.norm(v, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    return v / norms


def wsc(design, z, delta: float = 0.25, n_directions: int = 1000, seed: int = 0, directions=None) -> float:
    """Minimum coverage over slabs holding at least ``delta`` of the rows."""
    design = np.asarray(design, dtype=float)
    if design.ndim == 1:
        design = design[:, None]
    z = np.asarray(z, dtype=float)
    n = len(z)
    if not 0 < delta <= 1:
        raise DataError("delta must lie in (0, 1]")
    if delta * n < 1:
        raise DataError(f"delta * n = {delta * n:.3g} < 1")
    min_len = int(np.ceil(delta * n - 1e-9))
    if directions is None:
        directions = random_directions(design.shape[1], n_directions, seed)
    directions = np.ascontiguousarray(directions, dtype=float)
    return float(_wsc_directions(np.ascontiguousarray(design), z, directions, min_len))


# -- dependence on set size -------------------------------------------------

def pearson(z, set_size) -> float:
    """Absolute Pearson correlation; 0 when either variable is constant."""
    z = np.asarray(z, dtype=float)
    v = np.asarray(set_size, dtype=float)
    # test constancy directly: v - v.mean() can leave rounding residue
    if np.ptp(z) == 0 or np.ptp(v) == 0:
        return 0.0
    zc, vc = z - z.mean(), v - v.mean()
    var_z, var_v = np.mean(zc**2), np.mean(vc**2)
    return float(min(1.0, abs(np.mean(zc * vc)) / np.sqrt(var_z * var_v)))


def _gaussian_gram(x):
    d2 = (x[:, None] - x[None, :]) ** 2
    dist = np.sqrt(d2)
    iu = np.triu_indices(len(x), k=1)
    med = np.median(dist[iu]) if len(iu[0]) else 0.0
    bw = med if med > 0 else 1.0
    return np.exp(-d2 / (2.0 * bw**2))


def _double_center(K):
    return K - K.mean(axis=0, keepdims=True) - K.mean(axis=1, keepdims=True) + K.mean()


def hsic(z, set_size, max_points: int = 2000, seed: int = 0) -> float:
    """Square root of the biased HSIC between coverage and set size.

    Gaussian kernels with median-distance bandwidths (1 when the median is 0).
    """
    if set_size is None:
        raise DataError("hsic requires set sizes")
    z = np.asarray(z, dtype=float)
    v = np.asarray(set_size, dtype=float)
    m = len(z)
    if m > max_points:
        keep = np.sort(np.random.default_rng(seed).choice(m, max_points, replace=False))
        z, v = z[keep], v[keep]
        m = max_points
    Kc = _double_center(_gaussian_gram(z))
    Lc = _double_center(_gaussian_gram(v))
    # trace(K H L H) = sum(Kc * Lc) for symmetric kernels
    stat = float(np.sum(Kc * Lc)) / m**2
    return float(np.sqrt(max(stat, 0.0)))
