import numpy as np
import pytest
from sklearn.metrics import adjusted_rand_score

from tata.clustering import assign, kmeans, update_centroid
from tata.errors import (
    DimensionMismatchError,
    EmptyCentroidsError,
    EmptyMembersError,
    InvalidNError,
    TooFewPointsError,
)
from tata.numerics import l2_normalize

from oracles import mean_loop, nearest_scan


def make_blobs(rng, centers, n_per, sigma):
    points, labels = [], []
    for i, c in enumerate(centers):
        for _ in range(n_per):
            points.append(c + sigma * rng.standard_normal(len(c)))
            labels.append(i)
    order = rng.permutation(len(points))
    return np.array(points)[order], np.array(labels)[order]


class TestKmeans:
    def test_saturation_each_point_its_own_centroid(self):
        rng = np.random.default_rng(50)
        pts = rng.standard_normal((6, 3))
        model = kmeans(pts, 6, seed=1)
        assert model.inertia == pytest.approx(0.0, abs=1e-20)
        assert sorted(model.assignments.tolist()) == list(range(6))
        recovered = model.centroids[model.assignments]
        np.testing.assert_allclose(recovered, pts, atol=1e-12)

    def test_single_cluster_is_mean(self):
        rng = np.random.default_rng(51)
        pts = rng.standard_normal((20, 4))
        model = kmeans(pts, 1, seed=0)
        np.testing.assert_allclose(model.centroids[0], mean_loop(pts.tolist()), atol=1e-12)

    def test_blob_recovery(self):
        rng = np.random.default_rng(52)
        centers = np.array([[2.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 2.0]])
        pts, labels = make_blobs(rng, centers, 50, 0.01)
        model = kmeans(pts, 3, seed=7)
        assert adjusted_rand_score(labels, model.assignments) == 1.0

    def test_centroid_equals_member_mean(self):
        rng = np.random.default_rng(53)
        pts = rng.standard_normal((40, 5))
        model = kmeans(pts, 4, seed=3)
        for c in range(4):
            members = pts[model.assignments == c]
            assert len(members) > 0
            np.testing.assert_allclose(model.centroids[c], members.mean(axis=0), atol=1e-7)

    def test_inertia_non_increasing(self):
        rng = np.random.default_rng(54)
        pts = rng.standard_normal((100, 6))
        model = kmeans(pts, 5, seed=9)
        history = model.inertia_history
        assert all(history[i + 1] <= history[i] + 1e-9 for i in range(len(history) - 1))

    def test_deterministic_byte_identical(self):
        rng = np.random.default_rng(55)
        pts = rng.standard_normal((60, 4))
        a = kmeans(pts, 4, seed=11)
        b = kmeans(pts.copy(), 4, seed=11)
        assert a.centroids.tobytes() == b.centroids.tobytes()
        assert np.array_equal(a.assignments, b.assignments)

    def test_no_empty_cluster_under_duplicates(self):
        pts = np.array([[0.0, 0.0]] * 8 + [[5.0, 5.0]] * 2)
        model = kmeans(pts, 3, seed=2)
        assert np.bincount(model.assignments, minlength=3).min() >= 1

    def test_too_few_points(self):
        with pytest.raises(TooFewPointsError):
            kmeans(np.ones((2, 3)), 5, seed=0)

    def test_invalid_n(self):
        with pytest.raises(InvalidNError):
            kmeans(np.ones((4, 2)), 0, seed=0)


class TestAssign:
    def test_exact_centroid_match(self):
        centroids = np.eye(4)
        assert assign(centroids[2], centroids) == 2

    def test_tie_breaks_low_index(self):
        centroids = np.array([[-1.0, 0.0], [1.0, 0.0]])
        assert assign([0.0, 0.0], centroids) == 0

    def test_matches_exhaustive_scan(self):
        rng = np.random.default_rng(60)
        centroids = rng.standard_normal((9, 5))
        for _ in range(30):
            p = rng.standard_normal(5)
            assert assign(p, centroids) == nearest_scan(p, centroids)

    def test_assign_recovers_distinct_centroids(self):
        rng = np.random.default_rng(61)
        centroids = rng.standard_normal((6, 3))
        for i, c in enumerate(centroids):
            assert assign(c, centroids) == i

    def test_empty_centroids(self):
        with pytest.raises(EmptyCentroidsError):
            assign([1.0, 2.0], np.empty((0, 2)))

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            assign([1.0, 2.0, 3.0], np.ones((2, 2)))


class TestUpdateCentroid:
    def test_singleton(self):
        c = l2_normalize([1.0, 2.0, 2.0])
        np.testing.assert_allclose(update_centroid([c]), c, atol=1e-15)

    def test_two_unit_vectors(self):
        u = l2_normalize([1.0, 0.0])
        v = l2_normalize([0.0, 1.0])
        expected = l2_normalize((u + v) / 2.0)
        np.testing.assert_allclose(update_centroid([u, v]), expected, atol=1e-15)

    def test_matches_accumulation_oracle(self):
        rng = np.random.default_rng(62)
        members = [l2_normalize(rng.standard_normal(8)) for _ in range(10)]
        got = update_centroid(members)
        want = l2_normalize(mean_loop([m.tolist() for m in members]))
        np.testing.assert_allclose(got, want, atol=1e-9)

    def test_empty_members(self):
        with pytest.raises(EmptyMembersError):
            update_centroid([])
