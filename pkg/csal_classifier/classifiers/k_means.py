import logging
import time

import numpy as np
from scipy.spatial.distance import cdist
from scipy.special import softmax
from sklearn.cluster import kmeans_plusplus

from csal_classifier.classifiers.base_classifier import ClusterConfig, Clusterer, SoftPartition
from csal_classifier.data import DataMatrix
from csal_classifier.processing.utils import cluster_means, reseed_empty_clusters

logger = logging.getLogger(__name__)


def soft_posteriors(points: np.ndarray, centers: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """
    Turns a hard k-means result into P(C_l | x_i).

    P is proportional to exp(-||x_i - c_l||^2 / (2 h^2)) with bandwidth h
    the mean distance of the points to their own center. When h is 0 every
    point sits on its center and the result is the one-hot assignment.
    """
    sq_distances = cdist(points, centers, "sqeuclidean")
    bandwidth = float(np.mean(np.sqrt(sq_distances[np.arange(points.shape[0]), labels])))
    if bandwidth <= 0.0:
        memberships = np.zeros_like(sq_distances)
        memberships[np.arange(points.shape[0]), labels] = 1.0
        return memberships
    return softmax(-sq_distances / (2.0 * bandwidth ** 2), axis=1)


class KMeansClusterer(Clusterer):
    def fit(self, data: DataMatrix, cfg: ClusterConfig) -> SoftPartition:
        """Lloyd iterations from k-means++ seeds until the assignment stops changing."""
        cfg.validate(data.n_points)
        start_time = time.perf_counter()
        points = data.points
        logger.info(f"Starting k-means with k={cfg.k} on {data.n_points} points (seed={cfg.seed})")

        centers, _ = kmeans_plusplus(points, n_clusters=cfg.k, random_state=cfg.seed)
        labels = self._assign(points, centers, cfg.k)
        trace: list[float] = []
        converged = False

        for iteration in range(1, cfg.max_iter + 1):
            centers = cluster_means(points, labels, cfg.k, previous=centers)
            objective = float(np.sum((points - centers[labels]) ** 2))
            trace.append(objective)
            logger.debug(f"k-means iteration {iteration}: objective={objective:.6f}")

            new_labels = self._assign(points, centers, cfg.k)
            if np.array_equal(new_labels, labels):
                converged = True
                break
            if len(trace) > 1 and trace[-2] - objective <= cfg.tol * max(abs(trace[-2]), 1e-300):
                labels = new_labels
                centers = cluster_means(points, labels, cfg.k, previous=centers)
                converged = True
                break
            labels = new_labels

        if not converged:
            logger.warning(f"k-means reached max_iter={cfg.max_iter} without converging")

        partition = SoftPartition(
            memberships=soft_posteriors(points, centers, labels),
            centers=centers,
            objective_trace=tuple(trace),
            iterations=len(trace),
            converged=converged,
        )
        logger.info(f"k-means finished after {len(trace)} iterations in "
                    f"{time.perf_counter() - start_time:.3f} seconds")
        return partition

    @staticmethod
    def _assign(points: np.ndarray, centers: np.ndarray, k: int) -> np.ndarray:
        labels = np.argmin(cdist(points, centers, "sqeuclidean"), axis=1)
        labels, _ = reseed_empty_clusters(points, labels, centers, k)
        return labels


def kmeans(data: DataMatrix, cfg: ClusterConfig) -> SoftPartition:
    return KMeansClusterer().fit(data, cfg)
