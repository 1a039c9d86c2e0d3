"""Hungarian assignment, centroid alignment between clusterings, and label bookkeeping."""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class AlignmentMap:
    """One-to-one mapping between two sets of K cluster indices.

    ``forward[i]`` is the reference index matched to cluster ``i``;
    ``inverse`` is the inverse permutation; ``total_cost`` is the sum of
    matched pairwise costs (globally minimal when produced by
    :func:`hungarian_solve`).
    """

    forward: np.ndarray
    inverse: np.ndarray
    total_cost: float

    def __post_init__(self):
        k = len(self.forward)
        if sorted(self.forward.tolist()) != list(range(k)):
            raise ValueError("forward mapping is not a permutation")
        if not np.array_equal(self.forward[self.inverse], np.arange(k)):
            raise ValueError("inverse does not invert forward")

    @property
    def is_identity(self) -> bool:
        return bool(np.array_equal(self.forward, np.arange(len(self.forward))))


def hungarian_solve(cost) -> AlignmentMap:
    """Minimum-total-cost perfect matching on a square cost matrix.

    Shortest-augmenting-path formulation with row/column potentials, O(K^3).
    """
    cost = np.asarray(cost, dtype=np.float64)
    if cost.ndim != 2 or cost.shape[0] != cost.shape[1]:
        raise ValueError(f"cost matrix must be square, got shape {cost.shape}")
    if not np.all(np.isfinite(cost)):
        raise ValueError("cost matrix must be finite")
    n = cost.shape[0]

    # 1-based columns; column 0 is the virtual start of each augmenting path.
    u = np.zeros(n + 1)
    v = np.zeros(n + 1)
    match = np.zeros(n + 1, dtype=np.int64)  # match[j] = row assigned to column j (0 = free)
    way = np.zeros(n + 1, dtype=np.int64)

    for i in range(1, n + 1):
        match[0] = i
        j0 = 0
        minv = np.full(n + 1, np.inf)
        used = np.zeros(n + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = match[j0]
            reduced = cost[i0 - 1, :] - u[i0] - v[1:]
            better = ~used[1:] & (reduced < minv[1:])
            minv[1:][better] = reduced[better]
            way[1:][better] = j0
            free_min = np.where(used[1:], np.inf, minv[1:])
            j1 = int(np.argmin(free_min)) + 1
            delta = free_min[j1 - 1]
            u[match[used]] += delta
            v[used] -= delta
            minv[1:][~used[1:]] -= delta
            j0 = j1
            if match[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            match[j0] = match[j1]
            j0 = j1

    forward = np.empty(n, dtype=np.int64)
    for j in range(1, n + 1):
        forward[match[j] - 1] = j - 1
    total = float(cost[np.arange(n), forward].sum())
    return AlignmentMap(forward=forward, inverse=np.argsort(forward), total_cost=total)


def align_centroids(c_curr, c_prev) -> AlignmentMap:
    """Match each current centroid to its closest previous one, one-to-one.

    Costs are unsquared Euclidean distances between centroid rows.
    """
    c_curr = np.asarray(c_curr, dtype=np.float64)
    c_prev = np.asarray(c_prev, dtype=np.float64)
    if c_curr.shape != c_prev.shape:
        raise ValueError(f"centroid shapes differ: {c_curr.shape} vs {c_prev.shape}")
    diff = c_curr[:, None, :] - c_prev[None, :, :]
    cost = np.sqrt((diff * diff).sum(axis=2))
    return hungarian_solve(cost)


def remap_labels(y, amap: AlignmentMap) -> np.ndarray:
    """Rewrite cluster labels through the inverse of an alignment map."""
    y = np.asarray(y, dtype=np.int64)
    if y.size and (y.min() < 0 or y.max() >= len(amap.forward)):
        raise IndexError("label out of range for alignment map")
    return amap.inverse[y]


def label_change_fraction(y_new, y_prev) -> float:
    """Fraction of samples whose cluster assignment differs between two clusterings."""
    y_new = np.asarray(y_new)
    y_prev = np.asarray(y_prev)
    if y_new.shape != y_prev.shape:
        raise ValueError(f"assignment lengths differ: {y_new.shape} vs {y_prev.shape}")
    return float(np.mean(y_new != y_prev))
