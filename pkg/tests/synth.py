"""Synthetic corpora used across the tests: Gaussian blobs and token-pool texts."""

import numpy as np


def blob_means(k: int, dim: int, rng: np.random.Generator,
               separation: float = 6.0, sigma: float = 1.0) -> np.ndarray:
    """Random cluster means rescaled so the closest pair sits at least
    ``separation * sigma`` apart."""
    means = rng.normal(size=(k, dim))
    dists = np.sqrt(((means[:, None] - means[None, :]) ** 2).sum(-1))
    np.fill_diagonal(dists, np.inf)
    means *= (separation * sigma * 1.05) / dists.min()
    return means


def sample_blobs(means: np.ndarray, per_cluster: int, rng: np.random.Generator,
                 sigma: float = 1.0):
    k, dim = means.shape
    points = np.vstack([rng.normal(mean, sigma, size=(per_cluster, dim)) for mean in means])
    labels = np.repeat(np.arange(k), per_cluster)
    return points, labels


def gaussian_blobs(k: int, per_cluster: int, dim: int, rng: np.random.Generator,
                   separation: float = 6.0, sigma: float = 1.0):
    means = blob_means(k, dim, rng, separation, sigma)
    points, labels = sample_blobs(means, per_cluster, rng, sigma)
    return points, labels, means


def write_embedding_file(path, points: np.ndarray, labels) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"dim={points.shape[1]}\n")
        for i, (row, label) in enumerate(zip(points, labels)):
            values = "\t".join(repr(float(v)) for v in row)
            fh.write(f"s{i}\tc{label}\t{values}\n")


def token_pool_rows(k: int, per_class: int, rng: np.random.Generator,
                    pool_size: int = 25, length_range=(6, 12), shared: int = 0):
    """(text, label) rows where each class draws words from its own pool,
    optionally mixed with a pool shared by all classes."""
    shared_pool = [f"s{i}" for i in range(shared)]
    rows = []
    for c in range(k):
        pool = [f"c{c}w{i}" for i in range(pool_size)] + shared_pool
        for _ in range(per_class):
            length = int(rng.integers(length_range[0], length_range[1] + 1))
            words = rng.choice(pool, size=length, replace=True)
            rows.append((" ".join(words), f"class{c}"))
    return rows


def write_text_file(path, rows) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for text, label in rows:
            fh.write(f"{text}\t{label}\n")
