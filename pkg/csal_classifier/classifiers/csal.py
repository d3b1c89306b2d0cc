"""
Clustering with self-adaptive labeling.

A base clusterer produces the first partition once. From then on a
Gaussian mixture classifier is trained on an A% pseudo-labeled subset of
each cluster and used to re-partition the data, in E (posteriors),
C (argmax), S (subset selection) and M (refit on the subset) steps.
"""
import logging
import time
from dataclasses import dataclass, field, replace

import numpy as np

from csal_classifier.classifiers import ClusterConfig, ClustererType, SoftPartition, create_clusterer
from csal_classifier.data import DataMatrix
from csal_classifier.errors import ConvergenceError, ValidationError
from csal_classifier.processing.labeling import LabeledSubset, LabelerConfig, select_training_data
from csal_classifier.processing.mixture import MixtureParams, estimate_params, masked_log_likelihood, posterior
from csal_classifier.processing.utils import count_changes, reseed_empty_clusters

logger = logging.getLogger(__name__)

# Relative slack before a drop in log-likelihood counts as a decrease
DECREASE_TOLERANCE = 1e-9

STOP_FIXED_POINT = "fixed_point"
STOP_TOLERANCE = "tolerance"
STOP_LIKELIHOOD_DECREASE = "likelihood_decrease"
STOP_MAX_ITER = "max_iter"


@dataclass(frozen=True)
class CsalConfig:
    k: int
    clusterer: ClustererType = ClustererType.GMM
    labeler: LabelerConfig = field(default_factory=LabelerConfig)
    max_iter: int = 100
    tol: float = 1e-8
    seed: int = 0
    cov_reg: float = 1e-6
    cluster_max_iter: int = 300
    cluster_tol: float = 1e-6
    fuzzifier_m: float = 2.0

    def validate(self, n_points: int) -> None:
        if self.max_iter < 1:
            raise ValidationError(f"max_iter must be at least 1, got {self.max_iter}")
        if not self.tol > 0:
            raise ValidationError(f"tol must be positive, got {self.tol}")
        self.labeler.validate()
        self.cluster_config().validate(n_points)

    def cluster_config(self) -> ClusterConfig:
        return ClusterConfig(k=self.k, max_iter=self.cluster_max_iter, tol=self.cluster_tol, seed=self.seed,
                             fuzzifier_m=self.fuzzifier_m, cov_reg=self.cov_reg)


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    log_likelihood: float
    changed_assignments: int
    selected_count: int


@dataclass(frozen=True, eq=False)
class CsalResult:
    partition: SoftPartition
    params: MixtureParams
    subset: LabeledSubset
    trace: tuple[IterationRecord, ...]
    iterations: int
    converged: bool
    stop_reason: str
    initial_log_likelihood: float

    @property
    def log_likelihoods(self) -> list[float]:
        return [record.log_likelihood for record in self.trace]


def init_params(data: DataMatrix, subset: LabeledSubset, cov_reg: float = 1e-6) -> MixtureParams:
    """Initial classifier from the pseudo-labeled subset; alpha is normalized over the selected total."""
    return estimate_params(data.points, subset.mask, cov_reg, shrink_small=True)


def e_step(data: DataMatrix, params: MixtureParams) -> SoftPartition:
    responsibilities, _ = posterior(data.points, params)
    return SoftPartition(memberships=responsibilities, centers=params.mu)


def c_step(partition: SoftPartition) -> np.ndarray:
    """y_il: 1 at each row's maximum posterior (lowest index on ties), else 0."""
    return partition.one_hot()


def s_step(data: DataMatrix, partition: SoftPartition, labeler: LabelerConfig) -> LabeledSubset:
    return select_training_data(data, partition, labeler)


def m_step(data: DataMatrix, subset: LabeledSubset, cov_reg: float = 1e-6) -> MixtureParams:
    """Refit alpha, mu and Sigma on the selected points only (lambda weights throughout)."""
    return estimate_params(data.points, subset.mask, cov_reg, shrink_small=True)


def log_likelihood(data: DataMatrix, subset: LabeledSubset, params: MixtureParams) -> float:
    """sum_i sum_l lambda_il log(alpha_l p(x_i | mu_l, Sigma_l))."""
    return masked_log_likelihood(data.points, params, subset.mask)


def _repair_empty_clusters(data: DataMatrix, partition: SoftPartition) -> SoftPartition:
    labels, moved = reseed_empty_clusters(data.points, partition.hard, partition.centers, partition.n_clusters)
    if not moved:
        return partition
    return partition.with_hard_labels(labels)


def csal_run(data: DataMatrix, cfg: CsalConfig, initial: SoftPartition | None = None) -> CsalResult:
    """
    Runs the full loop.

    ``initial`` lets callers reuse an existing clusterer run; otherwise
    cfg.clusterer is run once with cfg.seed. The loop stops when the hard
    partition and selection repeat, when the likelihood gain drops below
    cfg.tol, or after cfg.max_iter iterations. An iteration that would
    lower the likelihood of the previous accepted one is discarded and ends
    the run unconverged, so the recorded trace never decreases.
    """
    cfg.validate(data.n_points)
    start_time = time.perf_counter()
    labeler = replace(cfg.labeler, seed=cfg.seed)
    logger.info(f"Starting {cfg.clusterer.value}-CSAL with K={cfg.k}, {labeler.strategy.value} labeling, "
                f"A={labeler.percent_a}% on {data.n_points} points (seed={cfg.seed})")

    if initial is None:
        initial = create_clusterer(cfg.clusterer).fit(data, cfg.cluster_config())
    partition = _repair_empty_clusters(data, initial)
    subset = s_step(data, partition, labeler)
    params = init_params(data, subset, cfg.cov_reg)
    previous_ll = log_likelihood(data, subset, params)
    initial_ll = previous_ll
    logger.debug(f"CSAL initial log-likelihood={initial_ll:.6f} with {subset.selected_count} selected points")

    trace: list[IterationRecord] = []
    converged = False
    stop_reason = STOP_MAX_ITER
    for iteration in range(1, cfg.max_iter + 1):
        # the partition's hard labels are the C-step assignment
        candidate = _repair_empty_clusters(data, e_step(data, params))
        candidate_subset = s_step(data, candidate, labeler)
        candidate_params = m_step(data, candidate_subset, cfg.cov_reg)
        candidate_ll = log_likelihood(data, candidate_subset, candidate_params)
        if not np.isfinite(candidate_ll):
            logger.error(f"CSAL log-likelihood is not finite at iteration {iteration}")
            raise ConvergenceError(f"CSAL log-likelihood is not finite at iteration {iteration}",
                                   iteration=iteration)

        if trace and candidate_ll < previous_ll - DECREASE_TOLERANCE * max(1.0, abs(previous_ll)):
            logger.warning(f"CSAL iteration {iteration} would lower the log-likelihood "
                           f"({previous_ll:.6f} -> {candidate_ll:.6f}); keeping the previous state")
            stop_reason = STOP_LIKELIHOOD_DECREASE
            break

        changed = count_changes(partition.hard, candidate.hard)
        same_selection = np.array_equal(candidate_subset.selected, subset.selected)
        gain = candidate_ll - previous_ll
        partition, subset, params = candidate, candidate_subset, candidate_params
        trace.append(IterationRecord(iteration=iteration, log_likelihood=candidate_ll,
                                     changed_assignments=changed, selected_count=subset.selected_count))
        logger.debug(f"CSAL iteration {iteration}: log-likelihood={candidate_ll:.6f}, "
                     f"changed={changed}, selected={subset.selected_count}")
        previous_ll = candidate_ll

        if changed == 0 and same_selection:
            stop_reason = STOP_FIXED_POINT
            converged = True
            break
        if abs(gain) < cfg.tol:
            stop_reason = STOP_TOLERANCE
            converged = True
            break

    if stop_reason == STOP_MAX_ITER:
        logger.warning(f"CSAL reached max_iter={cfg.max_iter} without converging")
    logger.info(f"CSAL finished after {len(trace)} iterations ({stop_reason}) in "
                f"{time.perf_counter() - start_time:.3f} seconds")
    return CsalResult(partition=partition, params=params, subset=subset, trace=tuple(trace),
                      iterations=len(trace), converged=converged, stop_reason=stop_reason,
                      initial_log_likelihood=initial_ll)
