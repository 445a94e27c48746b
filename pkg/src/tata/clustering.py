"""K-means with k-means++ seeding for the two clustering passes.

Determinism contract: the same seed and input order yield byte-identical
centroids.  Distances are Euclidean; on unit-normalized embeddings this
is monotone with cosine distance, so the same metric serves both passes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionMismatchError,
    EmptyCentroidsError,
    EmptyMembersError,
    InvalidNError,
    TooFewPointsError,
)
from .numerics import as_float_vector, l2_normalize

MAX_ITER = 300
MOVEMENT_TOL = 1e-6


@dataclass
class ClusterModel:
    centroids: np.ndarray          # (n_clusters, dim)
    assignments: np.ndarray        # (n_points,) cluster index per input point
    inertia: float                 # sum of squared distances to assigned centroids
    inertia_history: list = field(default_factory=list)
    n_iter: int = 0


def _as_points(points) -> np.ndarray:
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2:
        raise DimensionMismatchError(f"expected a 2-D point array, got shape {pts.shape}")
    if not np.all(np.isfinite(pts)):
        raise TooFewPointsError("points contain NaN or Inf")
    return pts


def _nearest(points: np.ndarray, centroids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Index of the nearest centroid per point (ties to the lowest index)."""
    d2 = (
        np.sum(points * points, axis=1)[:, None]
        - 2.0 * points @ centroids.T
        + np.sum(centroids * centroids, axis=1)[None, :]
    )
    np.maximum(d2, 0.0, out=d2)
    return np.argmin(d2, axis=1), d2


def _plusplus_seed(points: np.ndarray, n_clusters: int, rng: np.random.Generator) -> np.ndarray:
    n = points.shape[0]
    centroids = np.empty((n_clusters, points.shape[1]), dtype=np.float64)
    centroids[0] = points[rng.integers(0, n)]
    closest = np.sum((points - centroids[0]) ** 2, axis=1)
    for i in range(1, n_clusters):
        total = closest.sum()
        if total <= 0.0:
            # all remaining points coincide with a chosen centroid
            centroids[i] = points[rng.integers(0, n)]
            continue
        idx = rng.choice(n, p=closest / total)
        centroids[i] = points[idx]
        closest = np.minimum(closest, np.sum((points - centroids[i]) ** 2, axis=1))
    return centroids


def _repair_empty(
    points: np.ndarray, assignments: np.ndarray, centroids: np.ndarray, n_clusters: int
) -> None:
    """Give each empty cluster the point currently farthest from its centroid.

    The empty cluster's centroid jumps onto the stolen point, so the
    repair strictly lowers inertia and the per-iteration monotonicity
    assertion survives.  Donor clusters are never drained below one
    member.  Mutates `assignments` and `centroids` in place.
    """
    for cluster in np.flatnonzero(np.bincount(assignments, minlength=n_clusters) == 0):
        cost = np.sum((points - centroids[assignments]) ** 2, axis=1)
        counts = np.bincount(assignments, minlength=n_clusters)
        cost[counts[assignments] <= 1] = -1.0
        p = int(np.argmax(cost))
        assignments[p] = cluster
        centroids[cluster] = points[p]


def kmeans(points, n_clusters: int, seed: int = 0) -> ClusterModel:
    """Lloyd iterations from k-means++ seeding.

    Stops when assignments are stable, the maximum centroid movement
    drops below 1e-6, or 300 iterations elapse.  The reported centroids
    are exactly the means of the reported assignments; no cluster is
    left empty.
    """
    pts = _as_points(points)
    n = pts.shape[0]
    if n_clusters < 1:
        raise InvalidNError(f"cluster count must be >= 1, got {n_clusters}")
    if n < n_clusters:
        raise TooFewPointsError(f"{n} points cannot fill {n_clusters} clusters")

    rng = np.random.default_rng(seed)
    centroids = _plusplus_seed(pts, n_clusters, rng)
    assignments = np.full(n, -1, dtype=np.int64)
    history: list[float] = []
    n_iter = 0

    for n_iter in range(1, MAX_ITER + 1):
        new_assignments, _ = _nearest(pts, centroids)
        _repair_empty(pts, new_assignments, centroids, n_clusters)
        inertia = float(np.sum((pts - centroids[new_assignments]) ** 2))
        if history:
            assert inertia <= history[-1] + 1e-9, "inertia increased across a Lloyd iteration"
        history.append(inertia)

        stable = bool(np.array_equal(new_assignments, assignments))
        assignments = new_assignments

        new_centroids = np.empty_like(centroids)
        for c in range(n_clusters):
            new_centroids[c] = pts[assignments == c].mean(axis=0)
        movement = float(np.max(np.linalg.norm(new_centroids - centroids, axis=1)))
        centroids = new_centroids
        if stable or movement < MOVEMENT_TOL:
            break

    final_inertia = float(np.sum((pts - centroids[assignments]) ** 2))
    return ClusterModel(
        centroids=centroids,
        assignments=assignments,
        inertia=final_inertia,
        inertia_history=history,
        n_iter=n_iter,
    )


def assign(point, centroids) -> int:
    """Nearest-centroid index for one point; ties break to the lowest index."""
    p = as_float_vector(point)
    c = np.asarray(centroids, dtype=np.float64)
    if c.ndim != 2 or c.shape[0] == 0:
        raise EmptyCentroidsError("no centroids to assign to")
    if c.shape[1] != p.shape[0]:
        raise DimensionMismatchError(f"point dim {p.shape[0]} vs centroid dim {c.shape[1]}")
    d2 = np.sum((c - p) ** 2, axis=1)
    return int(np.argmin(d2))


def update_centroid(members) -> np.ndarray:
    """Arithmetic mean of member embeddings, re-normalized to unit length."""
    m = np.asarray(members, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] == 0:
        raise EmptyMembersError("cannot average an empty member list")
    return l2_normalize(m.mean(axis=0))
