import logging
import math

import numpy as np

logger = logging.getLogger(__name__)

# Guards ceil() against products such as 60% of 5 landing a hair above 3
QUOTA_EPSILON = 1e-9


def selection_quota(percent_a: float, cluster_size: int) -> int:
    """
    Number of points to take from a cluster: ceil(A% of its size).

    Never 0 for a non-empty cluster and never more than the cluster holds.
    """
    if cluster_size <= 0:
        return 0
    quota = math.ceil(percent_a * cluster_size / 100.0 - QUOTA_EPSILON)
    return min(cluster_size, max(1, quota))


def cluster_means(points: np.ndarray, labels: np.ndarray, k: int, previous: np.ndarray | None = None) -> np.ndarray:
    """Per-cluster means; an empty cluster keeps its previous center when one is given."""
    sums = np.zeros((k, points.shape[1]))
    np.add.at(sums, labels, points)
    counts = np.bincount(labels, minlength=k).astype(float)
    means = np.divide(sums, counts[:, None], out=np.zeros_like(sums), where=counts[:, None] > 0)
    if previous is not None:
        means[counts == 0] = previous[counts == 0]
    return means


def reseed_empty_clusters(points: np.ndarray, labels: np.ndarray, centers: np.ndarray,
                          k: int) -> tuple[np.ndarray, list[int]]:
    """
    Gives every empty cluster one point.

    The point farthest from its current center, taken from a cluster that
    keeps at least one member, moves into the empty cluster. Returns the
    repaired labels and the indices of the moved points.
    """
    labels = np.array(labels, dtype=int)
    moved = []
    for cluster in range(k):
        sizes = np.bincount(labels, minlength=k)
        if sizes[cluster] > 0:
            continue
        distances = np.sum((points - centers[labels]) ** 2, axis=1)
        distances = np.where(sizes[labels] > 1, distances, -np.inf)
        donor = int(np.argmax(distances))
        logger.warning(f"Cluster {cluster} is empty; reseeding it with point {donor} "
                       f"(was in cluster {labels[donor]})")
        labels[donor] = cluster
        moved.append(donor)
    return labels, moved


def count_changes(previous: np.ndarray | None, current: np.ndarray) -> int:
    if previous is None:
        return int(current.size)
    return int(np.count_nonzero(previous != current))
