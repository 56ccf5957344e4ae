"""
Fuzzy C-Means clustering.

Memberships are stored as a ``(c, n)`` array ``u`` whose columns sum to one;
data as an ``(n, d)`` array (1-D input is treated as ``d = 1``); centroids as
a ``(c, d)`` array. All reductions go through numpy's pairwise ``sum`` along a
fixed axis, never BLAS, so results do not depend on the thread count.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class DegenerateClusterError(ArithmeticError):
    """A cluster has zero total membership weight, so its centroid is undefined."""


@dataclass(frozen=True)
class FcmConfig:
    c: int = 2
    m: float = 2.0
    epsilon: float = 1e-5
    max_iter: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.c < 2:
            raise ValueError(f"cluster count must be >= 2, got {self.c}")
        if not self.m > 1:
            raise ValueError(f"fuzzifier m must be > 1, got {self.m}")
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be > 0, got {self.epsilon}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")


@dataclass
class FcmResult:
    membership: np.ndarray
    centroids: np.ndarray
    objective_history: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = False

    @property
    def objective(self) -> float:
        return self.objective_history[-1]


def as_points(data) -> np.ndarray:
    x = np.asarray(data, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2:
        raise ValueError(f"data must be 1-D or (n, d), got shape {x.shape}")
    return x


def init_membership(n: int, c: int, seed=0) -> np.ndarray:
    """Random ``(c, n)`` membership matrix with unit column sums."""
    if n < 1:
        raise ValueError("need at least one data point")
    if c < 2:
        raise ValueError("need at least two clusters")
    rng = np.random.default_rng(seed)
    # (0, 1] so no column can sum to zero
    u = 1.0 - rng.random((c, n))
    return u / u.sum(axis=0, keepdims=True)


def compute_centroids(u: np.ndarray, data, m: float) -> np.ndarray:
    """Membership-weighted means, weights ``u ** m``."""
    x = as_points(data)
    w = np.asarray(u, dtype=np.float64) ** m
    if w.shape[1] != x.shape[0]:
        raise ValueError(f"membership has {w.shape[1]} columns for {x.shape[0]} points")
    denom = w.sum(axis=1)
    bad = np.flatnonzero(denom == 0)
    if bad.size:
        raise DegenerateClusterError(f"cluster(s) {bad.tolist()} have zero membership weight")
    num = (w[:, :, None] * x[None, :, :]).sum(axis=1)
    cent = num / denom[:, None]
    # Guard against rounding just outside the data range.
    return np.clip(cent, x.min(axis=0), x.max(axis=0))


def distances(data, centroids) -> np.ndarray:
    """``(c, n)`` Euclidean distances between centroids and points."""
    x = as_points(data)
    v = np.atleast_2d(np.asarray(centroids, dtype=np.float64))
    diff = v[:, None, :] - x[None, :, :]
    return np.sqrt((diff * diff).sum(axis=2))


def update_membership(data, centroids, m: float) -> np.ndarray:
    """Membership from distance ratios, ``u_ij = 1 / sum_k (d_ij / d_kj)^(2/(m-1))``.

    A point sitting exactly on a centroid belongs fully to the lowest-indexed
    such centroid.
    """
    d = distances(data, centroids)
    zero = d == 0
    with np.errstate(divide="ignore"):
        # log-domain keeps extreme ratios (small m, tiny distances) finite
        logw = (-2.0 / (m - 1.0)) * np.log(d)
    logw[zero] = 0.0
    logw -= logw.max(axis=0, keepdims=True)
    w = np.exp(logw)
    u = w / w.sum(axis=0, keepdims=True)

    hit = zero.any(axis=0)
    if hit.any():
        first = np.argmax(zero, axis=0)
        u[:, hit] = 0.0
        u[first[hit], np.flatnonzero(hit)] = 1.0
    return u


def objective(u: np.ndarray, centroids, data, m: float) -> float:
    """Weighted within-cluster sum of squares ``sum_ij u_ij^m d_ij^2``."""
    d = distances(data, centroids)
    u = np.asarray(u, dtype=np.float64)
    if u.shape != d.shape:
        raise ValueError(f"membership shape {u.shape} does not match {d.shape}")
    return float(((u ** m) * (d * d)).sum(axis=1).sum())


def fcm_cluster(data, cfg: FcmConfig = FcmConfig(), init: np.ndarray | None = None) -> FcmResult:
    """Run Fuzzy C-Means from a random (or supplied) membership matrix.

    Each iteration computes centroids from the current memberships, records
    the objective, then refreshes the memberships from those centroids. The
    loop stops once the objective improves by less than ``cfg.epsilon`` or
    reaches zero. The returned memberships are those computed from the
    returned centroids.
    """
    x = as_points(data)
    n = x.shape[0]
    if n < cfg.c:
        raise ValueError(f"need at least {cfg.c} points for {cfg.c} clusters, got {n}")
    if not np.all(np.isfinite(x)):
        raise ValueError("data must be finite")

    if init is None:
        u = init_membership(n, cfg.c, cfg.seed)
    else:
        u = np.array(init, dtype=np.float64)
        if u.shape != (cfg.c, n):
            raise ValueError(f"initial membership must have shape {(cfg.c, n)}, got {u.shape}")

    history = []
    converged = False
    it = 0
    while it < cfg.max_iter:
        it += 1
        cent = compute_centroids(u, x, cfg.m)
        j = objective(u, cent, x, cfg.m)
        u = update_membership(x, cent, cfg.m)
        if j == 0.0 or (history and abs(history[-1] - j) < cfg.epsilon):
            history.append(j)
            converged = True
            break
        history.append(j)

    return FcmResult(membership=u, centroids=cent, objective_history=history,
                     iterations=it, converged=converged)
