import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from csal_classifier.data import DataMatrix
from csal_classifier.errors import ValidationError

logger = logging.getLogger(__name__)

ROW_SUM_TOLERANCE = 1e-9


class ClustererType(Enum):
    KMEANS = "kmeans"
    FCM = "fcm"
    GMM = "gmm"

    @classmethod
    def from_name(cls, name: str) -> 'ClustererType':
        try:
            return cls(name.lower())
        except ValueError:
            raise ValidationError(
                f"unknown clusterer {name!r}; expected one of {[c.value for c in cls]}") from None


@dataclass(frozen=True)
class ClusterConfig:
    """Settings shared by the base clusterers (and reused by CEM)."""
    k: int
    max_iter: int = 300
    tol: float = 1e-6
    seed: int = 0
    fuzzifier_m: float = 2.0
    cov_reg: float = 1e-6

    def validate(self, n_points: int) -> None:
        if not 1 <= self.k <= n_points:
            raise ValidationError(f"k must be between 1 and N={n_points}, got {self.k}")
        if self.max_iter < 1:
            raise ValidationError(f"max_iter must be positive, got {self.max_iter}")
        if not self.tol > 0:
            raise ValidationError(f"tol must be positive, got {self.tol}")
        if not self.fuzzifier_m > 1:
            raise ValidationError(f"fuzzifier_m must be greater than 1, got {self.fuzzifier_m}")
        if not self.cov_reg > 0:
            raise ValidationError(f"cov_reg must be positive, got {self.cov_reg}")


@dataclass(frozen=True, eq=False)
class SoftPartition:
    """
    Row-stochastic N x K membership matrix plus the cluster representatives.

    ``hard`` is derived from the memberships (row argmax, lowest index on
    ties) and never stored independently, so the two cannot disagree.
    ``objective_trace`` holds the per-iteration objective of the run that
    produced the partition (k-means/FCM cost, GMM log-likelihood).
    """
    memberships: np.ndarray
    centers: np.ndarray
    objective_trace: tuple[float, ...] = ()
    iterations: int = 0
    converged: bool = True
    hard: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        memberships = np.array(self.memberships, dtype=float)
        if memberships.ndim != 2 or memberships.shape[1] < 1:
            raise ValidationError(f"memberships must be an N x K matrix, got shape {memberships.shape}")
        if np.any(memberships < -ROW_SUM_TOLERANCE) or np.any(memberships > 1 + ROW_SUM_TOLERANCE):
            raise ValidationError("memberships must lie in [0, 1]")
        memberships = np.clip(memberships, 0.0, 1.0)
        row_sums = memberships.sum(axis=1)
        if np.any(np.abs(row_sums - 1.0) > ROW_SUM_TOLERANCE):
            worst = int(np.argmax(np.abs(row_sums - 1.0)))
            raise ValidationError(f"membership row {worst} sums to {row_sums[worst]!r}, not 1")
        centers = np.array(self.centers, dtype=float)
        if centers.ndim != 2 or centers.shape[0] != memberships.shape[1]:
            raise ValidationError(
                f"centers shape {centers.shape} does not match {memberships.shape[1]} clusters")

        hard = np.argmax(memberships, axis=1)
        for array in (memberships, centers, hard):
            array.setflags(write=False)
        object.__setattr__(self, "memberships", memberships)
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "hard", hard)
        object.__setattr__(self, "objective_trace", tuple(float(v) for v in self.objective_trace))

    @classmethod
    def from_labels(cls, labels: np.ndarray, centers: np.ndarray, **kwargs) -> 'SoftPartition':
        """Builds a one-hot partition from hard cluster labels."""
        centers = np.asarray(centers, dtype=float)
        labels = np.asarray(labels, dtype=int)
        memberships = np.zeros((labels.size, centers.shape[0]))
        memberships[np.arange(labels.size), labels] = 1.0
        return cls(memberships=memberships, centers=centers, **kwargs)

    @property
    def n_points(self) -> int:
        return self.memberships.shape[0]

    @property
    def n_clusters(self) -> int:
        return self.memberships.shape[1]

    def cluster_sizes(self) -> np.ndarray:
        return np.bincount(self.hard, minlength=self.n_clusters)

    def one_hot(self) -> np.ndarray:
        """The y_il indicator matrix of the hard assignment."""
        y = np.zeros(self.memberships.shape, dtype=int)
        y[np.arange(self.n_points), self.hard] = 1
        return y

    def with_hard_labels(self, labels: np.ndarray) -> 'SoftPartition':
        """Returns a copy whose rows for relabelled points become one-hot on their new cluster."""
        labels = np.asarray(labels, dtype=int)
        memberships = self.memberships.copy()
        moved = np.nonzero(labels != self.hard)[0]
        memberships[moved] = 0.0
        memberships[moved, labels[moved]] = 1.0
        return SoftPartition(memberships=memberships, centers=self.centers,
                             objective_trace=self.objective_trace,
                             iterations=self.iterations, converged=self.converged)


class Clusterer(ABC):
    @abstractmethod
    def fit(self, data: DataMatrix, cfg: ClusterConfig) -> SoftPartition:
        """Clusters the data into cfg.k groups."""
        pass
