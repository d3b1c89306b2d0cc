import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp
from scipy.stats import norm
from sklearn.naive_bayes import GaussianNB

from csal_classifier.classifiers.base_classifier import SoftPartition
from csal_classifier.data import DataMatrix
from csal_classifier.errors import ValidationError
from csal_classifier.processing.labeling import LabeledSubset

logger = logging.getLogger(__name__)

VARIANCE_FLOOR = 1e-9


@dataclass(frozen=True, eq=False)
class NaiveBayesModel:
    """Per-class priors plus diagonal Gaussian feature means and variances."""
    priors: np.ndarray
    means: np.ndarray
    variances: np.ndarray

    def __post_init__(self) -> None:
        priors = np.array(self.priors, dtype=float).reshape(-1)
        means = np.array(self.means, dtype=float)
        variances = np.array(self.variances, dtype=float)
        if means.shape != variances.shape or means.ndim != 2 or means.shape[0] != priors.size:
            raise ValidationError(
                f"inconsistent shapes: priors {priors.shape}, means {means.shape}, variances {variances.shape}")
        for array in (priors, means, variances):
            array.setflags(write=False)
        object.__setattr__(self, "priors", priors)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "variances", variances)

    @property
    def n_classes(self) -> int:
        return self.priors.size

    def to_dict(self) -> dict:
        return {"priors": self.priors.tolist(), "means": self.means.tolist(), "variances": self.variances.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> 'NaiveBayesModel':
        return cls(priors=data["priors"], means=data["means"], variances=data["variances"])


def nb_train(data: DataMatrix, subset: LabeledSubset) -> NaiveBayesModel:
    """Fits scikit-learn's GaussianNB on the selected points and floors the variances."""
    counts = subset.selected_per_cluster()
    empty = np.nonzero(counts == 0)[0]
    if empty.size:
        logger.error(f"Class {int(empty[0])} has no training points")
        raise ValidationError(f"class {int(empty[0])} has no selected points")

    classifier = GaussianNB(var_smoothing=0.0)
    classifier.fit(data.points[subset.selected], subset.labels[subset.selected])
    model = NaiveBayesModel(
        priors=classifier.class_prior_,
        means=classifier.theta_,
        variances=np.maximum(classifier.var_, VARIANCE_FLOOR),
    )
    logger.info(f"Trained Gaussian Naive Bayes on {subset.selected_count} points, {model.n_classes} classes")
    return model


def nb_classify(model: NaiveBayesModel, data: DataMatrix) -> SoftPartition:
    """Log-space diagonal Gaussian posteriors, one row per point."""
    joint = np.log(model.priors)[None, :] + np.stack(
        [norm.logpdf(data.points, loc=model.means[c], scale=np.sqrt(model.variances[c])).sum(axis=1)
         for c in range(model.n_classes)],
        axis=1,
    )
    memberships = np.exp(joint - logsumexp(joint, axis=1, keepdims=True))
    return SoftPartition(memberships=memberships, centers=model.means)
