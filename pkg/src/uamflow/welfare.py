"""Social welfare functions, inequality, and community reaction scoring."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


def _utilities(u) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(u, dtype=float))
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("utility vector must be a nonempty 1-D sequence")
    if not np.all(np.isfinite(arr)):
        raise ValueError("utility vector has non-finite entries")
    return arr


def fairness_threshold_swf(u, delta: float) -> float:
    """Utilitarian within ``delta`` of the worst-off party, maximin beyond it.

    Each party contributes ``min(u_i, u_min + delta)``; this is the same as
    ``delta + mean(min(u_i - delta, u_min))`` but stays finite for
    ``delta = inf``.
    """
    if delta < 0:
        raise ValueError(f"threshold must be >= 0, got {delta}")
    arr = _utilities(u)
    return float(np.mean(np.minimum(arr, arr.min() + delta)))


def fairness_threshold_swf_2party(u1: float, u2: float, delta: float) -> float:
    if abs(u1 - u2) >= delta:
        return min(u1, u2) + delta
    return 0.5 * (u1 + u2)


def alpha_fairness_swf(u, alpha: float) -> float:
    if alpha < 0:
        raise ValueError(f"alpha must be >= 0, got {alpha}")
    arr = _utilities(u)
    if alpha >= 1 and np.any(arr <= 0):
        raise ValueError("alpha >= 1 needs strictly positive utilities")
    if np.any(arr < 0):
        raise ValueError("alpha-fairness is undefined for negative utilities")
    if alpha == 1:
        return float(np.sum(np.log(arr)))
    return float(np.sum(arr ** (1.0 - alpha)) / (1.0 - alpha))


def gini(u) -> float:
    """Mean absolute difference over twice the mean; 0 for an all-zero vector."""
    arr = _utilities(u)
    if np.any(arr < 0):
        raise ValueError("Gini coefficient needs nonnegative entries")
    total = arr.sum()
    if total == 0:
        return 0.0
    n = arr.size
    s = np.sort(arr)
    # sum_{i,j} |u_i - u_j| = 2 * sum_k (2k - n - 1) s_k, k = 1..n
    k = np.arange(1, n + 1)
    pairwise = 2.0 * np.sum((2 * k - n - 1) * s)
    return float(pairwise / (2.0 * n * total))


DEFAULT_REACTION_ANCHORS: tuple[tuple[float, float], ...] = (
    (0.0, 0.0),
    (6.0, 0.3),
    (11.0, 0.5),
    (21.0, 0.85),
    (28.0, 1.0),
)


@dataclass(frozen=True)
class ReactionScore:
    """Piecewise-linear, nondecreasing, concave map from noise increase (dB) to [0, 1]."""

    anchors: tuple[tuple[float, float], ...] = DEFAULT_REACTION_ANCHORS

    def __post_init__(self):
        pts = tuple((float(x), float(y)) for x, y in self.anchors)
        object.__setattr__(self, "anchors", pts)
        if len(pts) < 2:
            raise ValueError("need at least two reaction anchors")
        xs = [p[0] for p in pts]
        ys = [p[1] for p in pts]
        if xs[0] != 0.0 or ys[0] != 0.0:
            raise ValueError("first reaction anchor must be (0, 0)")
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise ValueError("reaction anchor abscissae must be strictly increasing")
        if any(b < a for a, b in zip(ys, ys[1:])) or ys[-1] != 1.0:
            raise ValueError("reaction anchor scores must be nondecreasing and end at 1")
        slopes = [(y1 - y0) / (x1 - x0) for (x0, y0), (x1, y1) in zip(pts, pts[1:])]
        if any(s1 > s0 + 1e-12 for s0, s1 in zip(slopes, slopes[1:])):
            raise ValueError(f"reaction anchors are not concave (segment slopes {slopes})")

    def __call__(self, increase):
        x = np.asarray(increase, dtype=float)
        if np.any(x < 0):
            raise ValueError("noise increase must be >= 0")
        xs, ys = zip(*self.anchors)
        out = np.interp(x, xs, ys, right=1.0)
        return float(out) if out.ndim == 0 else out


def reaction_score(noise_increase, anchors: Sequence[tuple[float, float]] | None = None):
    scorer = ReactionScore() if anchors is None else ReactionScore(tuple(anchors))
    return scorer(noise_increase)


def mean_or_zero(u) -> float:
    arr = np.asarray(u, dtype=float)
    return float(arr.mean()) if arr.size else 0.0


__all__ = [
    "fairness_threshold_swf",
    "fairness_threshold_swf_2party",
    "alpha_fairness_swf",
    "gini",
    "ReactionScore",
    "reaction_score",
    "DEFAULT_REACTION_ANCHORS",
    "mean_or_zero",
]
