"""Histogram gradient-boosted trees for binary logistic loss.

Leaf-wise growth on pre-binned features, early stopping on a seeded
holdout of the training rows.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..data import DataError


@dataclass(frozen=True)
class GBDTParams:
    n_bins: int = 255
    max_leaves: int = 31
    learning_rate: float = 0.1
    max_rounds: int = 1000
    early_stopping_rounds: int = 100
    valid_fraction: float = 0.2
    min_samples_leaf: int = 20
    reg_lambda: float = 10.0
    min_hessian: float = 1e-3
    min_split_gain: float = 1.0
    min_rows_for_holdout: int = 25
    fallback_rounds: int = 100
    subsample: float = 1.0


def bin_edges(col: np.ndarray, n_bins: int) -> np.ndarray:
    """Cut points so that ``searchsorted(edges, x, 'right')`` lies in 0..n_bins-1."""
    uniq = np.unique(col)
    if len(uniq) <= n_bins:
        return 0.5 * (uniq[:-1] + uniq[1:])
    qs = np.quantile(col, np.linspace(0, 1, n_bins + 1)[1:-1])
    return np.unique(qs)


def apply_bins(X: np.ndarray, edges: list[np.ndarray]) -> np.ndarray:
    out = np.empty(X.shape, dtype=np.int64)
    for j, e in enumerate(edges):
        out[:, j] = np.searchsorted(e, X[:, j], side="right")
    return out


@dataclass
class Tree:
    feature: list[int] = field(default_factory=list)
    split_bin: list[int] = field(default_factory=list)
    left: list[int] = field(default_factory=list)
    right: list[int] = field(default_factory=list)
    value: list[float] = field(default_factory=list)

    def add_leaf(self, value: float) -> int:
        self.feature.append(-1)
        self.split_bin.append(-1)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(value)
        return len(self.value) - 1

    def freeze(self):
        return (
            np.asarray(self.feature),
            np.asarray(self.split_bin),
            np.asarray(self.left),
            np.asarray(self.right),
            np.asarray(self.value, dtype=float),
        )


def predict_tree(frozen, binned: np.ndarray) -> np.ndarray:
    feature, split_bin, left, right, value = frozen
    node = np.zeros(len(binned), dtype=np.int64)
    active = np.flatnonzero(feature[node] >= 0)
    while len(active):
        n = node[active]
        go_left = binned[active, feature[n]] <= split_bin[n]
        node[active] = np.where(go_left, left[n], right[n])
        active = active[feature[node[active]] >= 0]
    return value[node]


class _Grower:
    def __init__(self, binned, g, h, params: GBDTParams, n_bins):
        self.binned = binned
        self.g = g
        self.h = h
        self.p = params
        self.nb = n_bins
        self.d = binned.shape[1]
        self.offsets = np.arange(self.d) * n_bins

    def histogram(self, rows):
        flat = (self.binned[rows] + self.offsets).ravel()
        size = self.d * self.nb
        G = np.bincount(flat, weights=np.repeat(self.g[rows], self.d), minlength=size)
        H = np.bincount(flat, weights=np.repeat(self.h[rows], self.d), minlength=size)
        C = np.bincount(flat, minlength=size).astype(float)
        return np.stack([G, H, C]).reshape(3, self.d, self.nb)

    def best_split(self, hist):
        """(gain, feature, bin) of the best split; ties to lowest feature then bin."""
        p = self.p
        G, H, C = hist[0, 0].sum(), hist[1, 0].sum(), hist[2, 0].sum()
        cum = np.cumsum(hist, axis=2)[:, :, :-1]
        GL, HL, CL = cum
        GR, HR, CR = G - GL, H - HL, C - CL
        lam = p.reg_lambda
        parent = G * G / (H + lam) if H + lam > 0 else 0.0
        with np.errstate(divide="ignore", invalid="ignore"):
            gain = GL * GL / (HL + lam) + GR * GR / (HR + lam) - parent
        ok = (
            (CL >= p.min_samples_leaf)
            & (CR >= p.min_samples_leaf)
            & (HL >= p.min_hessian)
            & (HR >= p.min_hessian)
        )
        gain = np.where(ok, gain, -np.inf)
        if gain.size == 0:
            return -np.inf, -1, -1
        flat = int(np.argmax(gain))
        f, b = divmod(flat, gain.shape[1])
        return float(gain[f, b]), f, b

    def leaf_value(self, hist):
        G, H = hist[0, 0].sum(), hist[1, 0].sum()
        return -G / (H + self.p.reg_lambda) if H + self.p.reg_lambda > 0 else 0.0

    def grow(self, rows) -> tuple[Tree, np.ndarray]:
        """Grow one tree; returns it with the per-row leaf value for ``rows``."""
        tree = Tree()
        root_hist = self.histogram(rows)
        root = tree.add_leaf(self.leaf_value(root_hist))
        # leaf id -> (rows, hist, (gain, f, b))
        leaves = {root: (rows, root_hist, self.best_split(root_hist))}
        n_leaves = 1
        while n_leaves < self.p.max_leaves:
            best_id, best_gain = None, self.p.min_split_gain
            for lid in sorted(leaves):
                gain = leaves[lid][2][0]
                if gain > best_gain:
                    best_id, best_gain = lid, gain
            if best_id is None:
                break
            lrows, lhist, (_, f, b) = leaves.pop(best_id)
            mask = self.binned[lrows, f] <= b
            left_rows, right_rows = lrows[mask], lrows[~mask]
            if len(left_rows) <= len(right_rows):
                left_hist = self.histogram(left_rows)
                right_hist = lhist - left_hist
            else:
                right_hist = self.histogram(right_rows)
                left_hist = lhist - right_hist
            li = tree.add_leaf(self.leaf_value(left_hist))
            ri = tree.add_leaf(self.leaf_value(right_hist))
            tree.feature[best_id] = f
            tree.split_bin[best_id] = b
            tree.left[best_id] = li
            tree.right[best_id] = ri
            leaves[li] = (left_rows, left_hist, self.best_split(left_hist))
            leaves[ri] = (right_rows, right_hist, self.best_split(right_hist))
            n_leaves += 1
        contrib = np.empty(len(self.g))
        for lid, (lrows, _, _) in leaves.items():
            contrib[lrows] = tree.value[lid]
        return tree, contrib[rows]


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def _logloss(raw, z):
    # numerically stable binary cross-entropy from logits
    return float(np.mean(np.logaddexp(0.0, raw) - z * raw))


@dataclass
class GBDTModel:
    edges: list[np.ndarray]
    init_score: float
    trees: list
    learning_rate: float
    info: dict

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        binned = apply_bins(np.asarray(X, dtype=float), self.edges)
        raw = np.full(len(binned), self.init_score)
        for t in self.trees:
            raw += self.learning_rate * predict_tree(t, binned)
        return raw

    def predict(self, X: np.ndarray) -> np.ndarray:
        return _sigmoid(self.decision_function(X))


def fit_gbdt(X, z, params: GBDTParams | None = None, seed: int = 0) -> GBDTModel:
    params = params or GBDTParams()
    X = np.asarray(X, dtype=float)
    z = np.asarray(z, dtype=float)
    n = len(z)
    if n == 0:
        raise DataError("empty training set")
    edges = [bin_edges(X[:, j], params.n_bins) for j in range(X.shape[1])]
    binned = apply_bins(X, edges)

    holdout = n >= params.min_rows_for_holdout
    if holdout:
        perm = np.random.default_rng(seed).permutation(n)
        n_valid = max(1, int(round(params.valid_fraction * n)))
        valid_rows = np.sort(perm[:n_valid])
        train_rows = np.sort(perm[n_valid:])
        max_rounds = params.max_rounds
    else:
        valid_rows = np.empty(0, dtype=np.int64)
        train_rows = np.arange(n)
        max_rounds = params.fallback_rounds

    base = float(np.clip(z[train_rows].mean(), 1e-6, 1 - 1e-6))
    init = float(np.log(base / (1.0 - base)))
    raw_tr = np.full(len(train_rows), init)
    raw_va = np.full(len(valid_rows), init)
    z_tr, z_va = z[train_rows], z[valid_rows]
    b_tr, b_va = binned[train_rows], binned[valid_rows]

    trees = []
    best_loss = _logloss(raw_va, z_va) if holdout else np.inf
    best_rounds = 0
    local = np.arange(len(train_rows))
    bag_rng = np.random.default_rng([seed, 1])
    n_bag = max(1, int(round(params.subsample * len(local))))
    # labels without variation leave nothing to fit beyond the base rate
    if np.all(z_tr == z_tr[0]):
        max_rounds = 0
    for rnd in range(max_rounds):
        prob = _sigmoid(raw_tr)
        grower = _Grower(b_tr, prob - z_tr, prob * (1.0 - prob), params, params.n_bins)
        rows = local if n_bag >= len(local) else np.sort(bag_rng.choice(local, n_bag, replace=False))
        tree, contrib = grower.grow(rows)
        frozen = tree.freeze()
        trees.append(frozen)
        if rows is not local:
            contrib = predict_tree(frozen, b_tr)
        raw_tr += params.learning_rate * contrib
        if holdout:
            raw_va += params.learning_rate * predict_tree(frozen, b_va)
            loss = _logloss(raw_va, z_va)
            if loss < best_loss:
                best_loss, best_rounds = loss, rnd + 1
            elif rnd + 1 - best_rounds >= params.early_stopping_rounds:
                break
    if holdout:
        trees = trees[:best_rounds]
    info = {
        "rounds": len(trees),
        "early_stopping": holdout,
        "note": "" if holdout else f"fewer than {params.min_rows_for_holdout} rows: {params.fallback_rounds} fixed rounds",
    }
    return GBDTModel(edges=edges, init_score=init, trees=trees, learning_rate=params.learning_rate, info=info)
