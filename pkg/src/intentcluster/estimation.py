"""Cluster-count estimation by over-clustering and dropping low-confidence clusters."""

from dataclasses import dataclass

import numpy as np

from .alignment import hungarian_solve
from .clustering import kmeans_run


@dataclass(frozen=True)
class ClusterEstimate:
    """Outcome of one over-clustered run.

    ``threshold`` is the mean cluster size; clusters at least that large are
    confident. ``known_set`` holds the cluster indices induced from labeled
    data (empty in the unsupervised setting); those count through ``k_known``
    regardless of size, and ``k_new`` counts the confident clusters outside it.
    """

    sizes: np.ndarray
    threshold: float
    known_set: frozenset
    k_known: int
    k_new: int
    k_total: int


def estimate_from_sizes(sizes, known_set=frozenset()) -> ClusterEstimate:
    """Apply the size-threshold rule to per-cluster counts."""
    sizes = np.asarray(sizes, dtype=np.int64)
    known_set = frozenset(int(k) for k in known_set)
    threshold = float(sizes.sum() / sizes.size)
    confident = sizes >= threshold
    k_new = int(sum(1 for k in np.flatnonzero(confident) if k not in known_set))
    return ClusterEstimate(sizes=sizes, threshold=threshold, known_set=known_set,
                           k_known=len(known_set), k_new=k_new,
                           k_total=len(known_set) + k_new)


def estimate_k_unsup(points, k_prime: int, rng: np.random.Generator,
                     *, max_iter: int = 300, tol: float = 1e-6,
                     restarts: int = 10, seed_trials: int = 10) -> ClusterEstimate:
    """Over-cluster once with K' centroids and count the clusters of at least mean size.

    The single over-clustering uses greedy seeding and keeps the lowest-objective
    run out of ``restarts`` seedings; with one size per true group riding on an
    even spread of the K' seeds, plain one-shot seeding is too noisy.
    """
    points = np.asarray(points, dtype=np.float64)
    state = _overcluster(points, k_prime, rng, max_iter, tol, restarts, seed_trials)
    return estimate_from_sizes(state.cluster_sizes())


def induce_known_clusters(labeled_points, labeled_labels, centroids) -> frozenset:
    """Match each known class to one cluster by assignment on class-centroid distances.

    The class centroid is the mean representation of its labeled samples; the
    rectangular problem is padded to a square cost matrix with a constant
    exceeding every real cost, then solved exactly.
    """
    labeled_points = np.asarray(labeled_points, dtype=np.float64)
    labels = np.asarray(labeled_labels, dtype=np.int64)
    centroids = np.asarray(centroids, dtype=np.float64)
    k_known = int(labels.max()) + 1 if labels.size else 0
    k_prime = centroids.shape[0]
    if k_known > k_prime:
        raise ValueError(f"{k_known} known classes cannot be induced from {k_prime} clusters")
    class_means = np.empty((k_known, centroids.shape[1]))
    for c in range(k_known):
        members = labels == c
        if not members.any():
            raise ValueError(f"known class {c} has no labeled samples")
        class_means[c] = labeled_points[members].mean(axis=0)
    diff = class_means[:, None, :] - centroids[None, :, :]
    cost = np.sqrt((diff * diff).sum(axis=2))
    padded = np.full((k_prime, k_prime), cost.max() + 1.0)
    padded[:k_known] = cost
    mapping = hungarian_solve(padded)
    return frozenset(int(j) for j in mapping.forward[:k_known])


def estimate_k_semi(points, labeled_points, labeled_labels, k_prime: int,
                    rng: np.random.Generator, *, max_iter: int = 300,
                    tol: float = 1e-6, restarts: int = 10,
                    seed_trials: int = 10) -> ClusterEstimate:
    """Semi-supervised estimate: induced known clusters count once each, and the
    size threshold only gates the remaining clusters."""
    labeled_points = np.asarray(labeled_points, dtype=np.float64)
    if labeled_points.size == 0:
        return estimate_k_unsup(points, k_prime, rng, max_iter=max_iter, tol=tol,
                                restarts=restarts, seed_trials=seed_trials)
    points = np.asarray(points, dtype=np.float64)
    state = _overcluster(points, k_prime, rng, max_iter, tol, restarts, seed_trials)
    known = induce_known_clusters(labeled_points, labeled_labels, state.centroids)
    return estimate_from_sizes(state.cluster_sizes(), known)


def _overcluster(points: np.ndarray, k_prime: int, rng: np.random.Generator,
                 max_iter: int, tol: float, restarts: int, seed_trials: int):
    if k_prime > points.shape[0]:
        raise ValueError(f"k_prime={k_prime} exceeds the number of points {points.shape[0]}")
    best = None
    for _ in range(max(1, restarts)):
        state = kmeans_run(points, k_prime, rng=rng, max_iter=max_iter, tol=tol,
                           local_trials=seed_trials)
        if best is None or state.objective < best.objective:
            best = state
    return best
