"""Independent scalar-loop oracles used by the test suite.

Everything here is written from the defining formulas with plain Python
loops, deliberately avoiding the vectorized code under test.
"""

import math


def norm_loop(v):
    return math.sqrt(sum(float(x) * float(x) for x in v))


def dot_loop(u, v):
    return sum(float(a) * float(b) for a, b in zip(u, v))


def cosine_loop(u, v):
    return dot_loop(u, v) / (norm_loop(u) * norm_loop(v))


def softmax_loop(scores, tau):
    scaled = [float(s) / tau for s in scores]
    top = max(scaled)
    exps = [math.exp(s - top) for s in scaled]
    total = sum(exps)
    return [e / total for e in exps]


def pdist_loop(rows):
    n = len(rows)
    return [[math.dist(rows[i], rows[j]) for j in range(n)] for i in range(n)]


def center_loop(a):
    n = len(a)
    row = [sum(a[i]) / n for i in range(n)]
    col = [sum(a[i][j] for i in range(n)) / n for j in range(n)]
    grand = sum(sum(r) for r in a) / (n * n)
    return [[a[i][j] - row[i] - col[j] + grand for j in range(n)] for i in range(n)]


def dcov2_loop(x_rows, y_rows):
    a = center_loop(pdist_loop(x_rows))
    b = center_loop(pdist_loop(y_rows))
    n = len(a)
    return sum(a[i][j] * b[i][j] for i in range(n) for j in range(n)) / (n * n)


def mean_loop(rows):
    n = len(rows)
    dim = len(rows[0])
    return [sum(r[d] for r in rows) / n for d in range(dim)]


def nearest_scan(point, centroids):
    best, best_d = 0, float("inf")
    for i, c in enumerate(centroids):
        d = sum((float(a) - float(b)) ** 2 for a, b in zip(point, c))
        if d < best_d:
            best, best_d = i, d
    return best


def greedy_match_loop(probs):
    """Step-by-step global-max matching with full rescans (n x n lists)."""
    n = len(probs)
    labels = [-1] * n
    used_rows, used_cols = set(), set()
    for _ in range(n):
        best = (-float("inf"), None, None)
        for i in range(n):
            if i in used_rows:
                continue
            for m in range(n):
                if m in used_cols:
                    continue
                if probs[i][m] > best[0]:
                    best = (probs[i][m], i, m)
        _, i, m = best
        labels[i] = m
        used_rows.add(i)
        used_cols.add(m)
    return labels
