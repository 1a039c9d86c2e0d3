"""K-Means machinery: K-Means++ seeding and Lloyd iterations with cold or warm initialization."""

from dataclasses import dataclass, field

import numpy as np


@dataclass
class ClusterState:
    """Result of one clustering run.

    ``objective`` is the sum of squared distances between each point and its
    assigned centroid, recomputed exactly for the returned (centroids,
    assignment) pair. ``objective_trace`` holds the objective after the
    initial assignment and after every Lloyd iteration.
    """

    centroids: np.ndarray
    assignment: np.ndarray
    objective: float
    iteration: int
    objective_trace: tuple = field(default=(), repr=False)
    reseeds: int = 0

    @property
    def k(self) -> int:
        return self.centroids.shape[0]

    def cluster_sizes(self) -> np.ndarray:
        return np.bincount(self.assignment, minlength=self.k)


def kmeans_pp_init(points, k: int, rng: np.random.Generator,
                   local_trials: int = 1) -> np.ndarray:
    """Select k seed centroids among the points.

    The first seed is uniform; each later seed is drawn with probability
    proportional to its squared distance to the nearest seed chosen so far,
    so a point coincident with an existing seed has probability zero. With
    ``local_trials > 1`` each step draws that many candidates from the same
    law and keeps the one that lowers the seeding potential the most (the
    greedy variant standard toolkits run).
    """
    pts = np.asarray(points, dtype=np.float64)
    n = pts.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    chosen = np.empty(k, dtype=np.int64)
    chosen[0] = rng.integers(n)
    d2 = ((pts - pts[chosen[0]]) ** 2).sum(axis=1)
    for i in range(1, k):
        total = d2.sum()
        if total > 0.0:
            candidates = rng.choice(n, size=local_trials, p=d2 / total)
            idx = int(candidates[0])
            if local_trials > 1:
                best_potential = np.inf
                for c in dict.fromkeys(candidates.tolist()):
                    potential = np.minimum(d2, ((pts - pts[c]) ** 2).sum(axis=1)).sum()
                    if potential < best_potential:
                        best_potential, idx = potential, int(c)
        else:
            # all remaining points coincide with chosen seeds; fall back to
            # uniform choice among the unchosen indices
            pool = np.setdiff1d(np.arange(n), chosen[:i])
            idx = int(rng.choice(pool))
        chosen[i] = idx
        d2 = np.minimum(d2, ((pts - pts[idx]) ** 2).sum(axis=1))
    return pts[chosen].copy()


def kmeans_run(points, init, *, rng: np.random.Generator | None = None,
               max_iter: int = 300, tol: float = 1e-6,
               local_trials: int = 1) -> ClusterState:
    """Lloyd iterations until assignment fixpoint, centroid shift < tol, or max_iter.

    ``init`` is either an integer k (K-Means++ seeding, requires ``rng``) or a
    K x D array of warm-start centroids, in which case no re-seeding happens.
    Distance ties are broken toward the lowest cluster index; an emptied
    cluster is re-seeded to the point farthest from its assigned centroid.
    """
    pts = np.asarray(points, dtype=np.float64)
    if isinstance(init, (int, np.integer)):
        if rng is None:
            raise ValueError("K-Means++ seeding needs a random generator")
        centroids = kmeans_pp_init(pts, int(init), rng, local_trials=local_trials)
    else:
        centroids = np.array(init, dtype=np.float64, copy=True)
        if centroids.ndim != 2 or centroids.shape[1] != pts.shape[1]:
            raise ValueError(f"warm centroids of shape {centroids.shape} do not match points of dimension {pts.shape[1]}")
    k = centroids.shape[0]

    assignment = _nearest(pts, centroids)
    trace = [_sse(pts, centroids, assignment)]
    reseeds = 0
    iteration = 0
    for iteration in range(1, max_iter + 1):
        new_centroids = centroids.copy()
        counts = np.bincount(assignment, minlength=k)
        for c in np.flatnonzero(counts > 0):
            new_centroids[c] = pts[assignment == c].mean(axis=0)
        empties = np.flatnonzero(counts == 0)
        if empties.size:
            reseeds += int(empties.size)
            dist = ((pts - new_centroids[assignment]) ** 2).sum(axis=1)
            for c in empties:
                far = int(np.argmax(dist))
                new_centroids[c] = pts[far]
                dist[far] = -np.inf
        shift = np.sqrt(((new_centroids - centroids) ** 2).sum(axis=1)).max()
        centroids = new_centroids
        new_assignment = _nearest(pts, centroids)
        trace.append(_sse(pts, centroids, new_assignment))
        converged = np.array_equal(new_assignment, assignment)
        assignment = new_assignment
        if converged or shift < tol:
            break
    return ClusterState(centroids=centroids, assignment=assignment,
                        objective=trace[-1], iteration=iteration,
                        objective_trace=tuple(trace), reseeds=reseeds)


def mse_objective(points, state: ClusterState) -> float:
    """Sum of squared distances between each point and its assigned centroid."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.shape[0] != state.assignment.shape[0]:
        raise ValueError("points and assignment lengths differ")
    return _sse(pts, state.centroids, state.assignment)


def _nearest(pts: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    d2 = ((pts[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    return np.argmin(d2, axis=1)


def _sse(pts: np.ndarray, centroids: np.ndarray, assignment: np.ndarray) -> float:
    return float(((pts - centroids[assignment]) ** 2).sum())
