"""Proper binary scoring rules, their divergences and over/under splits.

Every score is evaluated as ``score(p, y, target)`` where ``p`` is the
predicted probability that the set covers, ``y`` the observed coverage
indicator and ``target`` the desired coverage level ``1 - alpha``.
Scores that do not depend on the target simply ignore it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

ScoreFn = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]

GRID_SIZE = 1001
CONVEXITY_TOL = 1e-9
KL_EPS = 1e-6


class ScoreError(ValueError):
    pass


@dataclass(frozen=True)
class ProperScore:
    name: str
    fn: ScoreFn
    needs_target: bool
    clamp: float = 0.0

    def __call__(self, p, y, target=0.9):
        p = np.asarray(p, dtype=float)
        if self.clamp > 0:
            p = np.clip(p, self.clamp, 1.0 - self.clamp)
        out = self.fn(p, np.asarray(y, dtype=float), np.asarray(target, dtype=float))
        return out if np.ndim(out) else float(out)

    def expected(self, p, q, target=0.9):
        """Expected score of predicting ``p`` when the truth is ``q``."""
        q = np.asarray(q, dtype=float)
        return q * self(p, 1.0, target) + (1.0 - q) * self(p, 0.0, target)


def _sign(x):
    return np.sign(x)  # np.sign(0) == 0


def l1_score(p, y, target):
    return _sign(np.asarray(p) - target) * (target - np.asarray(y))


def brier_score(p, y, target=None):
    return (np.asarray(y) - np.asarray(p)) ** 2


def log_loss_score(p, y, target=None, eps=KL_EPS):
    p = np.clip(np.asarray(p, dtype=float), eps, 1.0 - eps)
    y = np.asarray(y, dtype=float)
    return -y * np.log(p) - (1.0 - y) * np.log1p(-p)


L1 = ProperScore("l1", l1_score, needs_target=True)
BRIER = ProperScore("l2", brier_score, needs_target=False)
LOG_LOSS = ProperScore("kl", lambda p, y, t: log_loss_score(p, y, eps=0.0), needs_target=False, clamp=KL_EPS)


def log_loss(eps: float = KL_EPS) -> ProperScore:
    """Log-loss with a custom clamping interval ``[eps, 1 - eps]``."""
    return ProperScore("kl", lambda p, y, t: log_loss_score(p, y, eps=0.0), needs_target=False, clamp=eps)


def divergence(score: ProperScore, p, q, target=0.9):
    """Expected excess score of predicting ``p`` under truth ``q``."""
    return score.expected(p, q, target) - score.expected(q, q, target)


# -- constructions from convex functions ------------------------------------

def _grid():
    return np.linspace(0.0, 1.0, GRID_SIZE)


def _check_midpoint_convex(values: np.ndarray, what: str):
    # values on an evenly spaced grid; pairs (i, i + 2s) around midpoint i + s
    n = len(values)
    for step in (1, 2, 5, 10, 50, 100, 250, 500):
        if 2 * step >= n:
            break
        lhs = values[step:n - step]
        rhs = 0.5 * (values[: n - 2 * step] + values[2 * step:])
        if np.any(lhs > rhs + CONVEXITY_TOL):
            raise ScoreError(f"{what} fails the midpoint convexity check")


@dataclass(frozen=True)
class ConvexDistanceSpec:
    """Distance ``f(p; target)`` from the target coverage with a subderivative.

    Both callables take ``(p, target)``. ``f`` must be convex in ``p``,
    nonnegative, and vanish together with ``f_prime`` at ``p = target``.
    """

    f: Callable
    f_prime: Callable
    name: str = "convex"
    check_targets: tuple[float, ...] = tuple(np.round(np.arange(0.05, 0.96, 0.05), 2))

    def validate(self):
        grid = _grid()
        for t in self.check_targets:
            fv = np.asarray(self.f(grid, t), dtype=float) * np.ones_like(grid)
            if np.any(fv < -CONVEXITY_TOL):
                raise ScoreError(f"f is negative for target {t}")
            if abs(float(self.f(np.float64(t), t))) > CONVEXITY_TOL:
                raise ScoreError(f"f(target) != 0 for target {t}")
            if abs(float(self.f_prime(np.float64(t), t))) > CONVEXITY_TOL:
                raise ScoreError(f"f_prime(target) != 0 for target {t}")
            _check_midpoint_convex(fv, f"f (target {t})")


def score_from_convex(spec: ConvexDistanceSpec) -> ProperScore:
    """Score ``-f(p) - (y - p) f'(p)`` whose excess risk equals ``E[f(p(X))]``."""
    spec.validate()

    def fn(p, y, t):
        return -spec.f(p, t) - (y - p) * spec.f_prime(p, t)

    return ProperScore(spec.name, fn, needs_target=True)


def score_from_bregman(psi: Callable, psi_prime: Callable, name: str = "bregman", clamp: float = 0.0) -> ProperScore:
    """Score ``-psi(p) - (y - p) psi'(p)``.

    Its divergence ``d(p, q)`` is the Bregman divergence ``D_psi(q || p)``.
    """
    grid = _grid()
    if clamp > 0:
        grid = np.clip(grid, clamp, 1.0 - clamp)
    _check_midpoint_convex(np.asarray(psi(grid), dtype=float) * np.ones_like(grid), "psi")

    def fn(p, y, t):
        return -psi(p) - (y - p) * psi_prime(p)

    return ProperScore(name, fn, needs_target=False, clamp=clamp)


def l1_distance() -> ConvexDistanceSpec:
    return ConvexDistanceSpec(
        f=lambda p, t: np.abs(t - p),
        f_prime=lambda p, t: np.sign(p - t),
        name="l1-convex",
    )


def squared_distance() -> ConvexDistanceSpec:
    return ConvexDistanceSpec(
        f=lambda p, t: (p - t) ** 2,
        f_prime=lambda p, t: 2.0 * (p - t),
        name="l2-convex",
    )


# -- over / under coverage split -------------------------------------------

def split_over_under(score: ProperScore, target: float | None = None) -> tuple[ProperScore, ProperScore]:
    """Return ``(over, under)`` parts of ``score``.

    ``over(p, y) = score(max(p, t), y)`` and ``under(p, y) = score(min(p, t), y)``
    with ``t`` the fixed ``target`` if given, else the evaluation-time target.
    Pointwise, ``over + under - score(t, .) == score``.
    """
    def pick_t(t):
        return t if target is None else np.asarray(target, dtype=float)

    def over(p, y, t):
        tt = pick_t(t)
        return score.fn(np.maximum(p, _clamped(score, tt)), y, tt)

    def under(p, y, t):
        tt = pick_t(t)
        return score.fn(np.minimum(p, _clamped(score, tt)), y, tt)

    return (
        ProperScore(score.name + "+", over, needs_target=True, clamp=score.clamp),
        ProperScore(score.name + "-", under, needs_target=True, clamp=score.clamp),
    )


def _clamped(score: ProperScore, t):
    return np.clip(t, score.clamp, 1.0 - score.clamp) if score.clamp > 0 else t


# -- registry ---------------------------------------------------------------

_REGISTRY: dict[str, ProperScore] = {"l1": L1, "l2": BRIER, "brier": BRIER, "kl": LOG_LOSS, "log": LOG_LOSS}


def register_score(name: str, score: ProperScore):
    _REGISTRY[name] = score


def register_convex(name: str, spec: ConvexDistanceSpec) -> ProperScore:
    score = score_from_convex(spec)
    score = ProperScore(name, score.fn, needs_target=True)
    _REGISTRY[name] = score
    return score


def get_score(name: str) -> ProperScore:
    try:
        return _REGISTRY[name]
    except KeyError:
        raise ScoreError(f"unknown score {name!r}; known: {sorted(_REGISTRY)}") from None


def check_properness(score: ProperScore, targets=None, n_grid: int = 101, tol: float = 1e-12) -> bool:
    """Grid check: ``E_q[score(p)] >= E_q[score(q)] - tol`` for all grid p, q, targets."""
    targets = np.round(np.arange(1, 100) / 100, 2) if targets is None else np.asarray(targets)
    grid = np.linspace(0.0, 1.0, n_grid)
    if score.clamp > 0:
        grid = np.clip(grid, score.clamp, 1.0 - score.clamp)
    P, Q = np.meshgrid(grid, grid, indexing="ij")
    for t in targets:
        lhs = score.expected(P, Q, t)
        rhs = score.expected(Q, Q, t)
        if np.any(lhs < rhs - tol):
            return False
    return True
