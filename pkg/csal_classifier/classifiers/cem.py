import logging
import time
from dataclasses import dataclass
from enum import Enum

import numpy as np

from csal_classifier.classifiers.base_classifier import ClusterConfig, SoftPartition
from csal_classifier.data import DataMatrix
from csal_classifier.errors import ConvergenceError, ValidationError
from csal_classifier.processing.mixture import (
    MixtureParams, estimate_params, masked_log_likelihood, posterior, spherical_params,
)
from csal_classifier.processing.utils import reseed_empty_clusters

logger = logging.getLogger(__name__)


class CovarianceMode(Enum):
    SPHERICAL = "spherical"  # one pooled s^2 * I shared by all clusters
    FULL = "full"


@dataclass(frozen=True, eq=False)
class CemResult:
    partition: SoftPartition
    params: MixtureParams
    trace: tuple[float, ...]
    iterations: int
    converged: bool


def _m_step(points: np.ndarray, labels: np.ndarray, k: int, cfg: ClusterConfig,
            covariance: CovarianceMode) -> MixtureParams:
    if covariance == CovarianceMode.SPHERICAL:
        return spherical_params(points, labels, k, cfg.cov_reg)
    one_hot = np.zeros((labels.size, k))
    one_hot[np.arange(labels.size), labels] = 1.0
    return estimate_params(points, one_hot, cfg.cov_reg, shrink_small=False)


def cem_run(data: DataMatrix, init: SoftPartition, cfg: ClusterConfig,
            covariance: CovarianceMode = CovarianceMode.SPHERICAL) -> CemResult:
    """
    Classification EM from an initial partition.

    Each cycle runs the M-step on the current hard partition, records the
    classification log-likelihood sum_i log(alpha_c(i) f(x_i; theta_c(i))),
    then the E-step posteriors and the C-step argmax. Stops when the C-step
    reproduces the partition or after cfg.max_iter cycles.
    """
    cfg.validate(data.n_points)
    start_time = time.perf_counter()
    points = data.points
    k = init.n_clusters
    labels = np.array(init.hard)
    if np.any(np.bincount(labels, minlength=k) == 0):
        raise ValidationError("the initial partition of CEM has an empty cluster")
    logger.info(f"Starting CEM ({covariance.value} covariance) with K={k} on {data.n_points} points")

    trace: list[float] = []
    converged = False
    responsibilities = init.memberships
    params = None
    for iteration in range(1, cfg.max_iter + 1):
        params = _m_step(points, labels, k, cfg, covariance)
        one_hot = np.zeros((labels.size, k))
        one_hot[np.arange(labels.size), labels] = 1.0
        log_likelihood = masked_log_likelihood(points, params, one_hot)
        if not np.isfinite(log_likelihood):
            raise ConvergenceError(f"CEM classification likelihood is not finite at iteration {iteration}",
                                   iteration=iteration)
        trace.append(log_likelihood)
        logger.debug(f"CEM iteration {iteration}: classification log-likelihood={log_likelihood:.6f}")

        responsibilities, _ = posterior(points, params)
        new_labels = np.argmax(responsibilities, axis=1)
        new_labels, _ = reseed_empty_clusters(points, new_labels, params.mu, k)
        if np.array_equal(new_labels, labels):
            converged = True
            break
        labels = new_labels

    if not converged:
        logger.warning(f"CEM reached max_iter={cfg.max_iter} without converging")

    partition = SoftPartition(memberships=responsibilities, centers=params.mu,
                              objective_trace=tuple(trace), iterations=len(trace),
                              converged=converged).with_hard_labels(labels)
    logger.info(f"CEM finished after {len(trace)} iterations in {time.perf_counter() - start_time:.3f} seconds")
    return CemResult(partition=partition, params=params, trace=tuple(trace),
                     iterations=len(trace), converged=converged)
