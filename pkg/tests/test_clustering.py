import numpy as np
import pytest

from intentcluster.clustering import (ClusterState, kmeans_pp_init, kmeans_run,
                                      mse_objective)
from synth import gaussian_blobs


class TestSeeding:
    def test_k_equals_n_exhausts_points(self):
        rng = np.random.default_rng(0)
        pts = rng.normal(size=(6, 3))
        seeds = kmeans_pp_init(pts, 6, rng)
        got = sorted(map(tuple, seeds))
        want = sorted(map(tuple, pts))
        assert got == want

    def test_coincident_point_never_selected(self):
        # a duplicate of the first chosen seed has squared distance 0
        pts = np.array([[0.0, 0.0], [0.0, 0.0], [10.0, 0.0], [0.0, 10.0]])
        rng = np.random.default_rng(1)
        for _ in range(300):
            seeds = kmeans_pp_init(pts, 3, rng)
            assert len({tuple(s) for s in seeds}) == 3

    def test_second_seed_prefers_far_cluster(self):
        rng = np.random.default_rng(2)
        near = rng.normal(size=(50, 2)) * 0.5
        far = rng.normal(size=(50, 2)) * 0.5 + 100.0
        pts = np.vstack([near, far])
        opposite = 0
        trials = 1000
        for _ in range(trials):
            seeds = kmeans_pp_init(pts, 2, rng)
            sides = {seeds[0][0] > 50.0, seeds[1][0] > 50.0}
            if len(sides) == 2:
                opposite += 1
        assert opposite / trials >= 0.99

    def test_k_larger_than_n_rejected(self):
        with pytest.raises(ValueError):
            kmeans_pp_init(np.zeros((3, 2)), 4, np.random.default_rng(0))


class TestLloyd:
    def test_points_equal_centroids_converge_immediately(self):
        pts = np.array([[0.0, 0.0], [5.0, 5.0], [9.0, 0.0]])
        state = kmeans_run(pts, pts.copy())
        assert state.iteration == 1
        assert state.objective == 0.0

    def test_single_cluster_mean_minimizer(self):
        state = kmeans_run(np.array([[0.0], [2.0]]), np.array([[0.3]]))
        assert state.centroids[0, 0] == pytest.approx(1.0)
        assert state.objective == pytest.approx(2.0)

    def test_two_cluster_hand_case(self):
        pts = np.array([[0.0], [1.0], [10.0], [11.0]])
        state = kmeans_run(pts, 2, rng=np.random.default_rng(3))
        assert sorted(state.centroids[:, 0].tolist()) == [0.5, 10.5]
        assert state.objective == pytest.approx(1.0)

    def test_objective_monotonically_nonincreasing(self):
        rng = np.random.default_rng(4)
        for _ in range(100):
            n = int(rng.integers(20, 60))
            d = int(rng.integers(1, 5))
            k = int(rng.integers(2, 6))
            pts = rng.normal(size=(n, d)) * rng.uniform(0.5, 3.0)
            state = kmeans_run(pts, k, rng=rng)
            trace = np.array(state.objective_trace)
            assert np.all(np.diff(trace) <= 1e-9)

    def test_warm_start_never_degrades_initial_objective(self):
        rng = np.random.default_rng(5)
        pts, _, _ = gaussian_blobs(4, 30, 3, rng)
        cold = kmeans_run(pts, 4, rng=rng)
        jittered = pts + rng.normal(size=pts.shape) * 0.05
        warm = kmeans_run(jittered, cold.centroids)
        base = mse_objective(jittered, ClusterState(
            centroids=cold.centroids,
            assignment=_nearest(jittered, cold.centroids),
            objective=0.0, iteration=0))
        assert warm.objective_trace[0] == pytest.approx(base)
        assert warm.objective <= warm.objective_trace[0] + 1e-9

    def test_assignment_is_nearest_centroid_of_output(self):
        rng = np.random.default_rng(6)
        for _ in range(20):
            pts = rng.normal(size=(40, 3))
            state = kmeans_run(pts, 3, rng=rng)
            assert np.array_equal(state.assignment, _nearest(pts, state.centroids))

    def test_deterministic_under_fixed_seed(self):
        pts = np.random.default_rng(7).normal(size=(50, 4))
        a = kmeans_run(pts, 5, rng=np.random.default_rng(11))
        b = kmeans_run(pts, 5, rng=np.random.default_rng(11))
        assert np.array_equal(a.centroids, b.centroids)
        assert np.array_equal(a.assignment, b.assignment)
        assert a.objective == b.objective

    def test_empty_cluster_repair_reseeds_far_point(self):
        # warm start with one centroid far from every point: it empties and is re-seeded
        pts = np.vstack([np.zeros((10, 2)), np.ones((10, 2)) * 4.0])
        warm = np.array([[0.0, 0.0], [4.0, 4.0], [100.0, 100.0]])
        state = kmeans_run(pts, warm)
        assert state.reseeds >= 1
        assert len(set(state.assignment.tolist())) >= 2
        trace = np.array(state.objective_trace)
        assert np.all(np.diff(trace) <= 1e-9)

    def test_distance_ties_break_to_lowest_index(self):
        pts = np.array([[1.0, 0.0]])
        warm = np.array([[0.0, 0.0], [2.0, 0.0]])
        state = kmeans_run(pts, warm, max_iter=0)
        assert state.assignment[0] == 0


class TestObjective:
    def test_zero_when_points_sit_on_centroids(self):
        pts = np.array([[1.0, 1.0], [2.0, 2.0]])
        state = ClusterState(centroids=pts.copy(), assignment=np.array([0, 1]),
                             objective=0.0, iteration=0)
        assert mse_objective(pts, state) == 0.0

    def test_squared_distance_of_single_point(self):
        state = ClusterState(centroids=np.array([[0.0, 0.0]]), assignment=np.array([0]),
                             objective=0.0, iteration=0)
        assert mse_objective(np.array([[3.0, 0.0]]), state) == pytest.approx(9.0)

    def test_recomputation_matches_carried_value(self):
        rng = np.random.default_rng(8)
        for _ in range(10):
            pts = rng.normal(size=(30, 3))
            state = kmeans_run(pts, 4, rng=rng)
            assert mse_objective(pts, state) == pytest.approx(state.objective, abs=1e-9)


def _nearest(pts, centroids):
    d2 = ((pts[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    return np.argmin(d2, axis=1)
