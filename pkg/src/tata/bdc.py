"""Brownian distance covariance over embedding vectors.

A feature vector is zero-padded to the next perfect square, reshaped
row-major into an s x s observation matrix, and mapped to the double
centered matrix of pairwise Euclidean distances between its rows.  The
squared distance covariance between two such matrices is the mean of
their elementwise product,

    dcov2 = (1/n^2) * sum_ij  A_ij * B_ij,

with n the observation count.  dcov2 is zero when the two observation
sets are independent and grows with linear or nonlinear dependence,
which is what makes it usable as a similarity score between a test
feature and a class prototype.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DimensionTooSmallError, SizeMismatchError
from .numerics import as_float_vector

# |values| below this are rounding residue of a quantity that is
# mathematically nonnegative; clamp so downstream exp() sees >= 0.
_NEGATIVE_EPS = 1e-12


def reshape_to_observations(v) -> np.ndarray:
    """Zero-pad `v` to the next perfect square s^2 >= D and reshape to s x s.

    Padding coordinates are constant zero, so they contribute the same
    fixed offset pattern to every embedding of a given dimension and do
    not perturb relative distances.
    """
    arr = as_float_vector(v)
    d = arr.shape[0]
    if d < 4:
        raise DimensionTooSmallError(f"need dimension >= 4 to form observations, got {d}")
    side = math.isqrt(d)
    if side * side < d:
        side += 1
    padded = np.zeros(side * side, dtype=np.float64)
    padded[:d] = arr
    return padded.reshape(side, side)


def pairwise_distance_matrix(obs) -> np.ndarray:
    """Euclidean distances between all row pairs of an observation matrix.

    Computed from explicit row differences rather than the Gram-matrix
    identity: the differences make the result exactly symmetric and keep
    translation invariance exact whenever the translated coordinates are
    exactly representable.
    """
    m = np.asarray(obs, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] < 2:
        raise SizeMismatchError(f"need >= 2 observation rows, got shape {m.shape}")
    diff = m[:, None, :] - m[None, :, :]
    return np.sqrt(np.sum(diff * diff, axis=2))


def double_center(a) -> np.ndarray:
    """Subtract row and column means and add back the grand mean.

    The result has every row sum and column sum equal to zero, which is
    the property dcov2 relies on.
    """
    m = np.asarray(a, dtype=np.float64)
    row_means = m.mean(axis=1, keepdims=True)
    col_means = m.mean(axis=0, keepdims=True)
    grand = m.mean()
    return m - row_means - col_means + grand


def dcov2(a, b) -> float:
    """Squared distance covariance between two double-centered matrices."""
    ma = np.asarray(a, dtype=np.float64)
    mb = np.asarray(b, dtype=np.float64)
    if ma.shape != mb.shape:
        raise SizeMismatchError(f"matrix sizes differ: {ma.shape} vs {mb.shape}")
    n = ma.shape[0]
    value = float(np.sum(ma * mb)) / (n * n)
    if -_NEGATIVE_EPS < value < 0.0:
        value = 0.0
    return value


def bdc_from_observations(obs) -> np.ndarray:
    """Double-centered distance matrix of an observation matrix."""
    return double_center(pairwise_distance_matrix(obs))


def bdc_matrix(v) -> np.ndarray:
    """BDC matrix of a single embedding vector (reshape, distances, center)."""
    return bdc_from_observations(reshape_to_observations(v))
