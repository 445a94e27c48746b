"""Shared vector primitives: normalization, cosine similarity, softmax.

All arithmetic runs in float64 regardless of the caller's dtype; file
storage is float32 but the double centering and covariance sums downstream
accumulate O(n^2) terms and need the headroom.
"""

from __future__ import annotations

import numpy as np

from .errors import (
    DimensionMismatchError,
    NonFiniteError,
    NonPositiveTemperatureError,
    ZeroVectorError,
)

ZERO_NORM_FLOOR = 1e-12


def as_float_vector(v) -> np.ndarray:
    """Coerce to a 1-D float64 array, rejecting NaN/Inf."""
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise DimensionMismatchError(f"expected a nonempty 1-D vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError("vector contains NaN or Inf")
    return arr


def l2_normalize(v) -> np.ndarray:
    """Scale `v` to unit L2 norm, preserving direction.

    Raises ZeroVectorError when the norm is below 1e-12.
    """
    arr = as_float_vector(v)
    norm = float(np.linalg.norm(arr))
    if norm < ZERO_NORM_FLOOR:
        raise ZeroVectorError(f"cannot normalize vector with norm {norm:.3e}")
    return arr / norm


def cosine_sim(u, v) -> float:
    """Cosine similarity of two vectors, clamped to [-1, 1] against rounding."""
    a = as_float_vector(u)
    b = as_float_vector(v)
    if a.shape != b.shape:
        raise DimensionMismatchError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na < ZERO_NORM_FLOOR or nb < ZERO_NORM_FLOOR:
        raise ZeroVectorError("cosine similarity undefined for a zero vector")
    return float(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0))


def cosine_sim_many(matrix, v) -> np.ndarray:
    """Cosine similarity of each row of `matrix` against `v` (vectorized)."""
    m = np.asarray(matrix, dtype=np.float64)
    b = as_float_vector(v)
    if m.ndim != 2 or m.shape[1] != b.shape[0]:
        raise DimensionMismatchError(f"rows of shape {m.shape} vs vector of dim {b.shape[0]}")
    row_norms = np.linalg.norm(m, axis=1)
    nb = float(np.linalg.norm(b))
    if nb < ZERO_NORM_FLOOR or np.any(row_norms < ZERO_NORM_FLOOR):
        raise ZeroVectorError("cosine similarity undefined for a zero vector")
    return np.clip(m @ b / (row_norms * nb), -1.0, 1.0)


def softmax_temp(scores, tau: float) -> np.ndarray:
    """Temperature softmax with max-subtraction for overflow safety.

    The output sums to 1 and its argmax equals the argmax of `scores`
    (ties resolve to the lowest index in both).
    """
    if not tau > 0:
        raise NonPositiveTemperatureError(f"temperature must be > 0, got {tau}")
    s = as_float_vector(scores) / float(tau)
    s -= s.max()
    e = np.exp(s)
    return e / e.sum()
