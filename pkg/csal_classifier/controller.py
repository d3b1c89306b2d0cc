import logging
from dataclasses import asdict, dataclass, field
from enum import Enum

import numpy as np

from csal_classifier.classifiers import ClusterConfig, ClustererType, SoftPartition, create_clusterer
from csal_classifier.classifiers.cem import cem_run
from csal_classifier.classifiers.csal import CsalConfig, csal_run
from csal_classifier.classifiers.gaussian_mixture import gmm_em
from csal_classifier.classifiers.naive_bayes import NaiveBayesModel, nb_classify, nb_train
from csal_classifier.data import DataMatrix
from csal_classifier.errors import ValidationError
from csal_classifier.processing.labeling import LabeledSubset, LabelerConfig
from csal_classifier.processing.mixture import MixtureParams

logger = logging.getLogger(__name__)


class Refinement(Enum):
    NONE = "none"
    CEM = "cem"
    CSAL = "csal"
    NB = "nb"


@dataclass(frozen=True)
class AlgorithmVariant:
    """A base clusterer optionally followed by CEM, CSAL or Naive Bayes (e.g. ``kmeans-csal``)."""
    clusterer: ClustererType
    refinement: Refinement = Refinement.NONE

    @classmethod
    def parse(cls, name: str) -> 'AlgorithmVariant':
        base, _, suffix = name.strip().lower().partition("-")
        clusterer = ClustererType.from_name(base)
        try:
            refinement = Refinement(suffix) if suffix else Refinement.NONE
        except ValueError:
            raise ValidationError(f"unknown algorithm {name!r}; expected <kmeans|fcm|gmm>[-cem|-csal|-nb]") from None
        if refinement == Refinement.NONE and suffix:
            raise ValidationError(f"unknown algorithm {name!r}")
        return cls(clusterer, refinement)

    @property
    def name(self) -> str:
        if self.refinement == Refinement.NONE:
            return self.clusterer.value
        return f"{self.clusterer.value}-{self.refinement.value}"

    @property
    def uses_labeler(self) -> bool:
        return self.refinement == Refinement.CSAL


@dataclass(frozen=True)
class RunSettings:
    """Everything a single algorithm run needs besides the data."""
    k: int
    seed: int = 0
    labeler: LabelerConfig = field(default_factory=LabelerConfig)
    max_iter: int = 100
    tol: float = 1e-8
    cov_reg: float = 1e-6
    cluster_max_iter: int = 300
    cluster_tol: float = 1e-6
    fuzzifier_m: float = 2.0

    def cluster_config(self) -> ClusterConfig:
        return ClusterConfig(k=self.k, max_iter=self.cluster_max_iter, tol=self.cluster_tol, seed=self.seed,
                             fuzzifier_m=self.fuzzifier_m, cov_reg=self.cov_reg)

    def to_dict(self) -> dict:
        values = asdict(self)
        values["labeler"]["strategy"] = self.labeler.strategy.value
        return values


@dataclass(frozen=True, eq=False)
class VariantOutcome:
    variant: AlgorithmVariant
    partition: SoftPartition
    params: MixtureParams | NaiveBayesModel | None
    subset: LabeledSubset | None
    trace: list[dict]
    iterations: int
    converged: bool


def _objective_rows(partition: SoftPartition, column: str) -> list[dict]:
    return [{"iteration": i, column: value} for i, value in enumerate(partition.objective_trace, start=1)]


def run_variant(data: DataMatrix, variant: AlgorithmVariant, settings: RunSettings) -> VariantOutcome:
    """
    Runs one algorithm variant on a dataset.

    CEM, CSAL and Naive Bayes all start from a run of the variant's base
    clusterer with the same seed, so paired variants share their first
    partition.
    """
    logger.info(f"Running {variant.name} with k={settings.k}, seed={settings.seed}")
    cluster_cfg = settings.cluster_config()

    if variant.refinement == Refinement.NONE:
        if variant.clusterer == ClustererType.GMM:
            partition, params = gmm_em(data, cluster_cfg)
            column = "log_likelihood"
        else:
            partition = create_clusterer(variant.clusterer).fit(data, cluster_cfg)
            params = None
            column = "objective"
        return VariantOutcome(variant, partition, params, None, _objective_rows(partition, column),
                              partition.iterations, partition.converged)

    initial = create_clusterer(variant.clusterer).fit(data, cluster_cfg)

    if variant.refinement == Refinement.CEM:
        cem_cfg = ClusterConfig(k=settings.k, max_iter=settings.max_iter, tol=settings.tol, seed=settings.seed,
                                fuzzifier_m=settings.fuzzifier_m, cov_reg=settings.cov_reg)
        result = cem_run(data, initial, cem_cfg)
        rows = [{"iteration": i, "log_likelihood": v} for i, v in enumerate(result.trace, start=1)]
        return VariantOutcome(variant, result.partition, result.params, None, rows,
                              result.iterations, result.converged)

    if variant.refinement == Refinement.CSAL:
        csal_cfg = CsalConfig(k=settings.k, clusterer=variant.clusterer, labeler=settings.labeler,
                              max_iter=settings.max_iter, tol=settings.tol, seed=settings.seed,
                              cov_reg=settings.cov_reg, cluster_max_iter=settings.cluster_max_iter,
                              cluster_tol=settings.cluster_tol, fuzzifier_m=settings.fuzzifier_m)
        result = csal_run(data, csal_cfg, initial=initial)
        rows = [asdict(record) for record in result.trace]
        return VariantOutcome(variant, result.partition, result.params, result.subset, rows,
                              result.iterations, result.converged)

    if variant.refinement == Refinement.NB:
        # trained once on the whole hard partition, no pseudo-label selection
        subset = LabeledSubset(selected=np.ones(data.n_points, dtype=bool), labels=initial.hard,
                               n_clusters=initial.n_clusters)
        model = nb_train(data, subset)
        partition = nb_classify(model, data)
        return VariantOutcome(variant, partition, model, subset, _objective_rows(initial, "objective"),
                              initial.iterations, initial.converged)

    logger.error(f"Invalid refinement: {variant.refinement}")
    raise ValidationError(f"Unsupported algorithm variant: {variant.name}")
