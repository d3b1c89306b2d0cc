import logging

import numpy as np
from scipy.optimize import linear_sum_assignment

from csal_classifier.classifiers.base_classifier import SoftPartition
from csal_classifier.errors import ValidationError

logger = logging.getLogger(__name__)


def confusion_counts(predicted: np.ndarray, truth: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """
    K x C matrix of how many points of cluster l carry true class c.

    Also returns the sorted distinct class values indexing the columns.
    """
    classes, truth_index = np.unique(truth, return_inverse=True)
    counts = np.zeros((k, classes.size), dtype=int)
    np.add.at(counts, (np.asarray(predicted, dtype=int), truth_index.reshape(-1)), 1)
    return counts, classes


def best_cluster_mapping(counts: np.ndarray) -> dict[int, int]:
    """Cluster -> class column bijection maximizing the matched total (optimal assignment)."""
    rows, cols = linear_sum_assignment(counts, maximize=True)
    return {int(r): int(c) for r, c in zip(rows, cols)}


def classification_accuracy(predicted: SoftPartition | np.ndarray, truth: np.ndarray) -> float:
    """
    Fraction of points whose cluster maps to their true class under the
    best cluster-to-class bijection.

    ``predicted`` is a SoftPartition or a vector of hard cluster ids
    0..K-1; K must equal the number of distinct true classes.
    """
    if truth is None:
        raise ValidationError("classification accuracy needs ground-truth labels")
    truth = np.asarray(truth)
    if isinstance(predicted, SoftPartition):
        labels, k = predicted.hard, predicted.n_clusters
    else:
        labels = np.asarray(predicted, dtype=int)
        k = int(labels.max()) + 1 if labels.size else 0
    if labels.shape != truth.shape:
        raise ValidationError(f"{labels.size} predictions for {truth.size} true labels")

    n_classes = len(np.unique(truth))
    if k != n_classes:
        logger.error(f"Cluster count {k} does not match class count {n_classes}")
        raise ValidationError(f"predicted cluster count {k} does not match {n_classes} true classes")

    counts, _ = confusion_counts(labels, truth, k)
    mapping = best_cluster_mapping(counts)
    matched = sum(counts[row, col] for row, col in mapping.items())
    return matched / truth.size
