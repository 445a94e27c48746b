"""Oracle-equivalence checks for the distance covariance pipeline.

Each property recomputes the quantity with plain scalar loops, straight
from the defining formulas, and compares against the vectorized path.
The CLI surfaces these as `tata bdc-selftest`.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .bdc import bdc_from_observations, dcov2


@dataclass
class PropertyResult:
    name: str
    passed: bool
    detail: str


def _dist_loops(x_rows) -> list:
    n = len(x_rows)
    return [
        [math.dist(x_rows[i], x_rows[j]) for j in range(n)]
        for i in range(n)
    ]


def _center_loops(a) -> list:
    n = len(a)
    row = [sum(a[i]) / n for i in range(n)]
    col = [sum(a[i][j] for i in range(n)) / n for j in range(n)]
    grand = sum(sum(r) for r in a) / (n * n)
    return [[a[i][j] - row[i] - col[j] + grand for j in range(n)] for i in range(n)]


def _dcov2_loops(x_rows, y_rows) -> float:
    a = _center_loops(_dist_loops(x_rows))
    b = _center_loops(_dist_loops(y_rows))
    n = len(a)
    return sum(a[i][j] * b[i][j] for i in range(n) for j in range(n)) / (n * n)


def _centering_ok(matrix, r) -> bool:
    tol = 1e-7 * r
    return (
        np.all(np.abs(matrix.sum(axis=0)) <= tol)
        and np.all(np.abs(matrix.sum(axis=1)) <= tol)
    )


def check_oracle_equivalence(seed: int = 0, trials: int = 100) -> PropertyResult:
    rng = np.random.default_rng(seed)
    started = time.perf_counter()
    worst = 0.0
    for _ in range(trials):
        x = rng.standard_normal((8, 4))
        y = rng.standard_normal((8, 4))
        fast = dcov2(bdc_from_observations(x), bdc_from_observations(y))
        slow = _dcov2_loops(x.tolist(), y.tolist())
        worst = max(worst, abs(fast - slow) / max(abs(slow), 1e-300))
        if not _centering_ok(bdc_from_observations(x), 8):
            return PropertyResult("dcov-oracle-equivalence", False, "centering violated")
    elapsed = time.perf_counter() - started
    ok = worst <= 1e-9
    return PropertyResult(
        "dcov-oracle-equivalence",
        ok,
        f"worst relative error {worst:.3e} over {trials} pairs in {elapsed:.3f}s",
    )


def check_two_point_closed_form(seed: int = 1, trials: int = 50) -> PropertyResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        x = rng.standard_normal((2, 5))
        y = rng.standard_normal((2, 5))
        gap_x = math.dist(x[0], x[1])
        gap_y = math.dist(y[0], y[1])
        value = dcov2(bdc_from_observations(x), bdc_from_observations(y))
        worst = max(worst, abs(value - gap_x * gap_y / 4.0))
    ok = worst <= 1e-10
    return PropertyResult("two-point-closed-form", ok, f"worst absolute error {worst:.3e}")


def check_translation_invariance(seed: int = 2, trials: int = 50) -> PropertyResult:
    # observations and shift quantized to a 2^-20 lattice so the
    # translated coordinates are exactly representable and the change
    # must be bitwise zero
    rng = np.random.default_rng(seed)
    scale = 2.0 ** -20
    worst = 0.0
    for _ in range(trials):
        x = np.round(rng.standard_normal((8, 4)) / scale) * scale
        y = rng.standard_normal((8, 4))
        shift = np.round(rng.standard_normal(4) / scale) * scale
        base = dcov2(bdc_from_observations(x), bdc_from_observations(y))
        moved = dcov2(bdc_from_observations(x + shift), bdc_from_observations(y))
        worst = max(worst, abs(moved - base))
    ok = worst == 0.0
    return PropertyResult("translation-invariance", ok, f"largest change {worst:.3e}")


def check_rotation_invariance(seed: int = 3, trials: int = 50) -> PropertyResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        x = rng.standard_normal((8, 4))
        y = rng.standard_normal((8, 4))
        q, _ = np.linalg.qr(rng.standard_normal((4, 4)))
        base = dcov2(bdc_from_observations(x), bdc_from_observations(y))
        rotated = dcov2(bdc_from_observations(x @ q), bdc_from_observations(y))
        worst = max(worst, abs(rotated - base) / max(abs(base), 1e-300))
    ok = worst <= 1e-9
    return PropertyResult("rotation-invariance", ok, f"worst relative change {worst:.3e}")


def check_independence_signal(seed: int = 4, trials: int = 100, draws: int = 100) -> PropertyResult:
    rng = np.random.default_rng(seed)
    hits = 0
    for _ in range(trials):
        x = rng.standard_normal((32, 32))
        bx = bdc_from_observations(x)
        self_value = dcov2(bx, bx)
        cross = np.mean([
            dcov2(bx, bdc_from_observations(rng.standard_normal((32, 32))))
            for _ in range(draws)
        ])
        if self_value > cross:
            hits += 1
    ok = hits >= trials - 1
    return PropertyResult("independence-signal", ok, f"{hits}/{trials} trials separated")


def run_selftest(seed: int = 0) -> list:
    return [
        check_oracle_equivalence(seed),
        check_two_point_closed_form(seed + 1),
        check_translation_invariance(seed + 2),
        check_rotation_invariance(seed + 3),
        check_independence_signal(seed + 4),
    ]
