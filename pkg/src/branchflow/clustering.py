"""Weighted K-means for grouping weighted points into service regions.

Lloyd iterations on a population-weighted objective: each center is the
weighted mean of its cluster, and cluster count for n points defaults to
floor(sqrt(n)) + 1 so region sizes grow with the square root of the
point count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ParameterError, _as_point_array, _as_mass_vector, _freeze
from .seeding import substream


@dataclass(frozen=True)
class WeightedPointSet:
    """Points with strictly positive weights, e.g. cities with populations."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "points", _as_point_array(self.points, "points"))
        object.__setattr__(self, "weights", _as_mass_vector(self.weights, "weights"))
        if self.weights.shape[0] != self.points.shape[0]:
            raise ParameterError("weights must have one entry per point")
        if self.points.shape[0] == 0:
            raise ParameterError("at least one point is required")
        if np.any(self.weights <= 0):
            raise ParameterError("weights must be strictly positive")

    @property
    def n_points(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True)
class KMeansResult:
    centroids: np.ndarray
    labels: np.ndarray
    objective: float          # sum of weight * squared distance to own center
    n_iter: int
    objective_history: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "centroids", _freeze(np.array(self.centroids, dtype=float)))
        object.__setattr__(self, "labels", _freeze(np.array(self.labels, dtype=np.int64)))
        object.__setattr__(
            self, "objective_history", _freeze(np.array(self.objective_history, dtype=float))
        )


def weighted_centroid(points, weights=None) -> np.ndarray:
    """Weight-averaged location of a point set.

    Accepts either a WeightedPointSet or separate point and weight arrays.
    """
    if isinstance(points, WeightedPointSet):
        if weights is not None:
            raise ParameterError("weights are already part of the point set")
        points, weights = points.points, points.weights
    pts = _as_point_array(points, "points")
    w = _as_mass_vector(weights, "weights")
    if w.shape[0] != pts.shape[0]:
        raise ParameterError("weights must have one entry per point")
    total = w.sum()
    if total <= 0:
        raise ParameterError("total weight must be positive")
    return (w[:, None] * pts).sum(axis=0) / total


def choose_k(n: int) -> int:
    """Default cluster count for n points: floor(sqrt(n)) + 1, capped at n."""
    if n < 1:
        raise ParameterError("n must be at least 1")
    return min(math.isqrt(n) + 1, n)


def _sq_dists(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    diff = points[:, None, :] - centers[None, :, :]
    return np.einsum("nkd,nkd->nk", diff, diff)


def _plus_plus_init(points, weights, k, rng) -> np.ndarray:
    """Weighted k-means++ seeding: far, heavy points make likely centers."""
    n = points.shape[0]
    centers = np.empty((k, points.shape[1]))
    probs = weights / weights.sum()
    centers[0] = points[rng.choice(n, p=probs)]
    if k == 1:
        return centers
    d2 = np.einsum("nd,nd->n", points - centers[0], points - centers[0])
    for c in range(1, k):
        scores = weights * d2
        total = scores.sum()
        if total <= 0:
            # all points coincide with chosen centers; any pick works
            centers[c] = points[rng.choice(n, p=probs)]
        else:
            centers[c] = points[rng.choice(n, p=scores / total)]
        step = points - centers[c]
        d2 = np.minimum(d2, np.einsum("nd,nd->n", step, step))
    return centers


def weighted_kmeans(
    pointset: WeightedPointSet,
    k: int,
    *,
    seed: int = 0,
    tol: float = 1e-9,
    max_iter: int = 200,
    init: np.ndarray | None = None,
) -> KMeansResult:
    """Cluster weighted points into k groups by Lloyd iteration.

    Each round assigns points to their nearest center, refills any center
    left empty with the point costing the most where it is, then moves
    every center to the weighted mean of its members.  Stops when the
    objective (sum of weight times squared distance) improves by at most
    ``tol``, so feeding a converged result's centroids back via ``init``
    reproduces it unchanged.
    """
    x = pointset.points
    w = pointset.weights
    n = pointset.n_points
    if not 1 <= k <= n:
        raise ParameterError(f"k must lie in [1, {n}], got {k}")
    if tol < 0:
        raise ParameterError("tol must be nonnegative")
    if max_iter < 1:
        raise ParameterError("max_iter must be at least 1")

    if init is not None:
        centers = np.array(init, dtype=float)
        if centers.shape != (k, pointset.dim):
            raise ParameterError(
                f"init must have shape ({k}, {pointset.dim}), got {centers.shape}"
            )
    else:
        centers = _plus_plus_init(x, w, k, substream(seed, "kmeans-init"))

    prev = math.inf
    history: list[float] = []
    labels = np.zeros(n, dtype=np.int64)
    for it in range(1, max_iter + 1):
        d2 = _sq_dists(x, centers)
        labels = np.argmin(d2, axis=1)

        counts = np.bincount(labels, minlength=k)
        if (counts == 0).any():
            costs = w * d2[np.arange(n), labels]
            for c in np.flatnonzero(counts == 0):
                # only steal from clusters that keep at least one member
                movable = counts[labels] > 1
                j = int(np.argmax(np.where(movable, costs, -1.0)))
                counts[labels[j]] -= 1
                counts[c] += 1
                labels[j] = c
                centers[c] = x[j]
                costs[j] = -1.0

        for c in range(k):
            members = labels == c
            wc = w[members]
            centers[c] = (wc[:, None] * x[members]).sum(axis=0) / wc.sum()

        diff = x - centers[labels]
        obj = float(np.sum(w * np.einsum("nd,nd->n", diff, diff)))
        history.append(obj)
        if prev - obj <= tol:
            break
        prev = obj

    return KMeansResult(centers, labels, history[-1], it, np.array(history))
