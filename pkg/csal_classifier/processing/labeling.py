"""
Training-data selection from a soft partition.

Every strategy takes ceil(A% * |C_l|) points from each non-empty cluster
and keeps the cluster's hard assignment as the pseudo-label. They differ in
how points are ranked inside a cluster: by distance to the center, by the
entropy of the membership row, or per cluster by whichever of the two the
cluster's mean silhouette calls for.
"""
import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.stats import entropy as shannon_entropy
from sklearn.metrics import silhouette_samples

from csal_classifier.classifiers.base_classifier import ROW_SUM_TOLERANCE, SoftPartition
from csal_classifier.data import DataMatrix
from csal_classifier.errors import ValidationError
from csal_classifier.processing.utils import selection_quota

logger = logging.getLogger(__name__)

DEFAULT_THRESHOLD = 0.35
SILHOUETTE_SAMPLE_SIZE = 500


class LabelerType(Enum):
    DISTANCE = "distance"
    ENTROPY = "entropy"
    SELF_ADAPTIVE = "self_adaptive"

    @classmethod
    def from_name(cls, name: str) -> 'LabelerType':
        try:
            return cls(name.lower().replace("-", "_"))
        except ValueError:
            raise ValidationError(
                f"unknown labeling strategy {name!r}; expected one of {[t.value for t in cls]}") from None


@dataclass(frozen=True)
class LabelerConfig:
    strategy: LabelerType = LabelerType.SELF_ADAPTIVE
    percent_a: float = 60.0
    silhouette_threshold: float = DEFAULT_THRESHOLD
    silhouette_sample: int = SILHOUETTE_SAMPLE_SIZE
    seed: int = 0

    def validate(self) -> None:
        if not 0 < self.percent_a <= 100:
            raise ValidationError(f"percent_a must be in (0, 100], got {self.percent_a}")
        if not -1 <= self.silhouette_threshold <= 1:
            raise ValidationError(f"silhouette_threshold must be in [-1, 1], got {self.silhouette_threshold}")
        if self.silhouette_sample < 2:
            raise ValidationError(f"silhouette_sample must be at least 2, got {self.silhouette_sample}")


@dataclass(frozen=True, eq=False)
class LabeledSubset:
    """
    The S-step output: which points are training data and their pseudo-labels.

    ``branches`` names the ranking used for each cluster ("distance" or
    "entropy"); it is only informative for the self-adaptive strategy.
    """
    selected: np.ndarray
    labels: np.ndarray
    n_clusters: int
    branches: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        selected = np.array(self.selected, dtype=bool)
        labels = np.array(self.labels, dtype=int)
        if selected.shape != labels.shape or selected.ndim != 1:
            raise ValidationError("selected and labels must be vectors of the same length")
        for array in (selected, labels):
            array.setflags(write=False)
        object.__setattr__(self, "selected", selected)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "branches", tuple(self.branches))

    @property
    def mask(self) -> np.ndarray:
        """The N x K lambda matrix: 1 where a point is selected and assigned to that cluster."""
        lam = np.zeros((self.selected.size, self.n_clusters), dtype=int)
        rows = np.nonzero(self.selected)[0]
        lam[rows, self.labels[rows]] = 1
        return lam

    @property
    def selected_count(self) -> int:
        return int(self.selected.sum())

    def selected_per_cluster(self) -> np.ndarray:
        return np.bincount(self.labels[self.selected], minlength=self.n_clusters)


def entropy(probs: np.ndarray) -> float:
    """Shannon entropy in bits of one membership vector, with 0 * log 0 = 0."""
    probs = np.asarray(probs, dtype=float)
    if probs.ndim != 1 or probs.size == 0:
        raise ValidationError("entropy expects a non-empty probability vector")
    if np.any(probs < 0) or np.any(probs > 1) or abs(probs.sum() - 1.0) > ROW_SUM_TOLERANCE:
        raise ValidationError(f"not a probability vector: {probs.tolist()}")
    return max(0.0, float(shannon_entropy(probs, base=2)))


def membership_entropies(partition: SoftPartition) -> np.ndarray:
    """Entropy in bits of every membership row."""
    return np.maximum(0.0, shannon_entropy(partition.memberships, base=2, axis=1))


def silhouette_values(points: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """
    Euclidean silhouette of every point.

    Points in singleton clusters score 0. Needs at least two distinct labels.
    """
    distinct = np.unique(labels)
    if distinct.size < 2:
        raise ValidationError("silhouette needs at least 2 clusters")
    if distinct.size == labels.size:
        return np.zeros(labels.size)
    return silhouette_samples(points, labels, metric="euclidean")


def silhouette(data: DataMatrix, partition: SoftPartition, i: int) -> float:
    if partition.n_clusters < 2:
        raise ValidationError("silhouette needs K >= 2")
    return float(silhouette_values(data.points, partition.hard)[i])


def mean_silhouette(data: DataMatrix, partition: SoftPartition, l: int) -> float:
    members = partition.hard == l
    if not members.any():
        raise ValidationError(f"cluster {l} is empty")
    if partition.n_clusters < 2:
        raise ValidationError("silhouette needs K >= 2")
    return float(silhouette_values(data.points, partition.hard)[members].mean())


def cluster_mean_silhouettes(points: np.ndarray, labels: np.ndarray, k: int,
                             sample_size: int = SILHOUETTE_SAMPLE_SIZE, seed: int = 0) -> np.ndarray:
    """
    MS(C_l) for every cluster; NaN for empty clusters.

    Exact up to ``sample_size`` points. Beyond that each cluster contributes
    ceil(sample_size * n_l / N) uniformly drawn members, which keeps the
    per-iteration cost independent of N squared.
    """
    n_points = labels.size
    if n_points > sample_size:
        rng = np.random.default_rng(seed)
        chosen = []
        for cluster in range(k):
            members = np.nonzero(labels == cluster)[0]
            if members.size:
                take = min(members.size, int(np.ceil(sample_size * members.size / n_points)))
                chosen.append(np.sort(rng.choice(members, size=take, replace=False)))
        index = np.concatenate(chosen)
        points, labels = points[index], labels[index]

    values = silhouette_values(points, labels)
    means = np.full(k, np.nan)
    for cluster in range(k):
        members = labels == cluster
        if members.any():
            means[cluster] = float(values[members].mean())
    return means


def _select_by_score(partition: SoftPartition, scores: np.ndarray, percent_a: float,
                     clusters: np.ndarray | None = None) -> np.ndarray:
    """Per cluster, marks the quota of members with the lowest scores (ties by index)."""
    selected = np.zeros(partition.n_points, dtype=bool)
    clusters = range(partition.n_clusters) if clusters is None else clusters
    for cluster in clusters:
        members = np.nonzero(partition.hard == cluster)[0]
        if members.size == 0:
            continue
        order = members[np.lexsort((members, scores[members]))]
        selected[order[:selection_quota(percent_a, members.size)]] = True
    return selected


def _center_distances(data: DataMatrix, partition: SoftPartition) -> np.ndarray:
    return np.linalg.norm(data.points - partition.centers[partition.hard], axis=1)


def label_by_distance(data: DataMatrix, partition: SoftPartition, cfg: LabelerConfig) -> LabeledSubset:
    """Keeps the members closest to their own cluster center."""
    cfg.validate()
    selected = _select_by_score(partition, _center_distances(data, partition), cfg.percent_a)
    return LabeledSubset(selected=selected, labels=partition.hard, n_clusters=partition.n_clusters,
                         branches=("distance",) * partition.n_clusters)


def label_by_entropy(partition: SoftPartition, cfg: LabelerConfig) -> LabeledSubset:
    """Keeps the members with the least uncertain membership rows."""
    cfg.validate()
    selected = _select_by_score(partition, membership_entropies(partition), cfg.percent_a)
    return LabeledSubset(selected=selected, labels=partition.hard, n_clusters=partition.n_clusters,
                         branches=("entropy",) * partition.n_clusters)


def label_self_adaptive(data: DataMatrix, partition: SoftPartition, cfg: LabelerConfig) -> LabeledSubset:
    """
    Distance ranking for clusters whose mean silhouette exceeds the
    threshold, entropy ranking for the rest (MS equal to the threshold goes
    to entropy).
    """
    cfg.validate()
    if partition.n_clusters < 2:
        raise ValidationError("self-adaptive labeling needs K >= 2")
    scores = cluster_mean_silhouettes(data.points, partition.hard, partition.n_clusters,
                                      sample_size=cfg.silhouette_sample, seed=cfg.seed)
    compact = np.nonzero(scores > cfg.silhouette_threshold)[0]
    diffuse = np.nonzero(~(scores > cfg.silhouette_threshold))[0]

    selected = (_select_by_score(partition, _center_distances(data, partition), cfg.percent_a, compact)
                | _select_by_score(partition, membership_entropies(partition), cfg.percent_a, diffuse))
    branches = tuple("distance" if s > cfg.silhouette_threshold else "entropy" for s in scores)
    logger.debug(f"Self-adaptive branches: "
                 + ", ".join(f"C{l}: MS={s:.3f} -> {b}" for l, (s, b) in enumerate(zip(scores, branches))))
    return LabeledSubset(selected=selected, labels=partition.hard, n_clusters=partition.n_clusters,
                         branches=branches)


def select_training_data(data: DataMatrix, partition: SoftPartition, cfg: LabelerConfig) -> LabeledSubset:
    """Dispatches to the configured strategy."""
    if cfg.strategy == LabelerType.DISTANCE:
        subset = label_by_distance(data, partition, cfg)
    elif cfg.strategy == LabelerType.ENTROPY:
        subset = label_by_entropy(partition, cfg)
    elif cfg.strategy == LabelerType.SELF_ADAPTIVE:
        subset = label_self_adaptive(data, partition, cfg)
    else:
        raise ValidationError(f"Unsupported labeling strategy: {cfg.strategy}")
    logger.debug(f"{cfg.strategy.value} labeling selected {subset.selected_count} of {partition.n_points} "
                 f"points (A={cfg.percent_a}%)")
    return subset
