"""Clustering evaluation: NMI, ARI, and best-mapping accuracy."""

from dataclasses import dataclass

import numpy as np

from .alignment import hungarian_solve


@dataclass(frozen=True)
class ContingencyTable:
    """Co-occurrence counts between predicted clusters (rows) and ground-truth classes (columns)."""

    counts: np.ndarray

    @property
    def row_sums(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def col_sums(self) -> np.ndarray:
        return self.counts.sum(axis=0)

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def contingency_table(y_gt, y_pred) -> ContingencyTable:
    y_gt, y_pred = _check_pair(y_gt, y_pred)
    _, gt = np.unique(y_gt, return_inverse=True)
    _, pred = np.unique(y_pred, return_inverse=True)
    counts = np.zeros((pred.max() + 1, gt.max() + 1), dtype=np.int64)
    np.add.at(counts, (pred, gt), 1)
    return ContingencyTable(counts=counts)


def nmi(y_gt, y_pred) -> float:
    """Mutual information normalized by the arithmetic mean of the two entropies.

    Natural logarithms throughout. When both partitions are single-class the
    ratio is 0/0; it is defined as 1.0 if the partitions are identical and
    0.0 otherwise.
    """
    table = contingency_table(y_gt, y_pred)
    n = table.total
    p_pred = table.row_sums / n
    p_gt = table.col_sums / n
    h_pred = -np.sum(p_pred * np.log(p_pred))
    h_gt = -np.sum(p_gt * np.log(p_gt))
    denom = 0.5 * (h_gt + h_pred)
    if denom == 0.0:
        return 1.0 if _same_partition(y_gt, y_pred) else 0.0
    nz = table.counts > 0
    p_joint = table.counts[nz] / n
    outer = np.outer(table.row_sums, table.col_sums)[nz] / (n * n)
    mi = float(np.sum(p_joint * np.log(p_joint / outer)))
    return mi / float(denom)


def ari(y_gt, y_pred) -> float:
    """Pair-counting adjusted Rand index over the contingency table, in [-1, 1]."""
    y_gt = np.asarray(y_gt)
    if y_gt.size < 2:
        raise ValueError("ari needs at least 2 samples")
    table = contingency_table(y_gt, y_pred)
    n = table.total
    sum_cells = int(_choose2(table.counts).sum())
    sum_rows = int(_choose2(table.row_sums).sum())
    sum_cols = int(_choose2(table.col_sums).sum())
    pairs = n * (n - 1) // 2
    expected = sum_rows * sum_cols / pairs
    maximum = 0.5 * (sum_rows + sum_cols)
    if maximum == expected:
        # both partitions trivial in the same way (all-one-cluster or all-singletons)
        return 1.0 if _same_partition(y_gt, y_pred) else 0.0
    return float((sum_cells - expected) / (maximum - expected))


def clustering_accuracy(y_gt, y_pred) -> float:
    """Best achievable accuracy over one-to-one relabelings of the predicted clusters.

    The optimal mapping is found with the Hungarian algorithm on the negated
    contingency table, padded with zero-match rows/columns when the two label
    alphabets differ in size.
    """
    table = contingency_table(y_gt, y_pred)
    counts = table.counts
    m = max(counts.shape)
    padded = np.zeros((m, m), dtype=np.int64)
    padded[: counts.shape[0], : counts.shape[1]] = counts
    cost = padded.max() - padded
    mapping = hungarian_solve(cost)
    matched = padded[np.arange(m), mapping.forward].sum()
    return float(matched / table.total)


def _choose2(x: np.ndarray) -> np.ndarray:
    x = x.astype(np.int64)
    return x * (x - 1) // 2


def _same_partition(y_gt, y_pred) -> bool:
    return np.array_equal(_first_occurrence_canon(y_gt), _first_occurrence_canon(y_pred))


def _first_occurrence_canon(y) -> np.ndarray:
    seen: dict = {}
    return np.array([seen.setdefault(v, len(seen)) for v in np.asarray(y).tolist()], dtype=np.int64)


def _check_pair(y_gt, y_pred):
    y_gt = np.asarray(y_gt)
    y_pred = np.asarray(y_pred)
    if y_gt.shape != y_pred.shape or y_gt.ndim != 1:
        raise ValueError(f"label vectors must be 1-D of equal length, got {y_gt.shape} and {y_pred.shape}")
    if y_gt.size == 0:
        raise ValueError("label vectors must be non-empty")
    return y_gt, y_pred
