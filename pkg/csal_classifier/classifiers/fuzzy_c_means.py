import logging
import time

import numpy as np
from scipy.spatial.distance import cdist
from scipy.special import softmax
from sklearn.cluster import kmeans_plusplus

from csal_classifier.classifiers.base_classifier import ClusterConfig, Clusterer, SoftPartition
from csal_classifier.data import DataMatrix

logger = logging.getLogger(__name__)


def fcm_memberships(points: np.ndarray, centers: np.ndarray, m: float) -> np.ndarray:
    """
    Bezdek membership update u_il = 1 / sum_j (d_il / d_ij)^(2 / (m - 1)).

    Evaluated as a softmax of -log(d_il^2) / (m - 1). A point that coincides
    with a center gets membership 1 there (the lowest such center) and 0
    elsewhere.
    """
    sq_distances = cdist(points, centers, "sqeuclidean")
    coincident = sq_distances <= 0.0
    safe = np.where(coincident, 1.0, sq_distances)
    memberships = softmax(-np.log(safe) / (m - 1.0), axis=1)

    hits = np.nonzero(coincident.any(axis=1))[0]
    if hits.size:
        memberships[hits] = 0.0
        memberships[hits, np.argmax(coincident[hits], axis=1)] = 1.0
    return memberships


def fcm_centers(points: np.ndarray, memberships: np.ndarray, m: float) -> np.ndarray:
    weights = memberships ** m
    totals = np.maximum(weights.sum(axis=0), np.finfo(float).tiny)
    return (weights.T @ points) / totals[:, None]


def fcm_objective(points: np.ndarray, memberships: np.ndarray, centers: np.ndarray, m: float) -> float:
    return float(np.sum(memberships ** m * cdist(points, centers, "sqeuclidean")))


class FuzzyCMeansClusterer(Clusterer):
    def fit(self, data: DataMatrix, cfg: ClusterConfig) -> SoftPartition:
        """Alternates center and membership updates until the objective changes by less than tol (relative)."""
        cfg.validate(data.n_points)
        start_time = time.perf_counter()
        points = data.points
        m = cfg.fuzzifier_m
        logger.info(f"Starting FCM with k={cfg.k}, m={m} on {data.n_points} points (seed={cfg.seed})")

        centers, _ = kmeans_plusplus(points, n_clusters=cfg.k, random_state=cfg.seed)
        memberships = fcm_memberships(points, centers, m)
        trace: list[float] = []
        converged = False

        for iteration in range(1, cfg.max_iter + 1):
            centers = fcm_centers(points, memberships, m)
            objective = fcm_objective(points, memberships, centers, m)
            trace.append(objective)
            logger.debug(f"FCM iteration {iteration}: objective={objective:.6f}")

            memberships = fcm_memberships(points, centers, m)
            if len(trace) > 1 and abs(trace[-2] - objective) <= cfg.tol * max(abs(trace[-2]), 1e-300):
                converged = True
                break

        if not converged:
            logger.warning(f"FCM reached max_iter={cfg.max_iter} without converging")

        logger.info(f"FCM finished after {len(trace)} iterations in "
                    f"{time.perf_counter() - start_time:.3f} seconds")
        return SoftPartition(
            memberships=memberships,
            centers=centers,
            objective_trace=tuple(trace),
            iterations=len(trace),
            converged=converged,
        )


def fcm(data: DataMatrix, cfg: ClusterConfig) -> SoftPartition:
    return FuzzyCMeansClusterer().fit(data, cfg)
