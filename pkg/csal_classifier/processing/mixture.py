import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp
from scipy.stats import multivariate_normal

from csal_classifier.errors import ConvergenceError, ValidationError

logger = logging.getLogger(__name__)

ALPHA_TOLERANCE = 1e-9


@dataclass(frozen=True, eq=False)
class MixtureParams:
    """
    theta = {alpha_l, mu_l, Sigma_l} of a K-component Gaussian mixture.

    ``sigma`` always holds K full d x d matrices; the spherical CEM variant
    stores the same scaled identity in every slot.
    """
    alpha: np.ndarray
    mu: np.ndarray
    sigma: np.ndarray

    def __post_init__(self) -> None:
        alpha = np.array(self.alpha, dtype=float).reshape(-1)
        mu = np.array(self.mu, dtype=float)
        sigma = np.array(self.sigma, dtype=float)
        k = alpha.size
        if mu.ndim != 2 or mu.shape[0] != k:
            raise ValidationError(f"mu has shape {mu.shape}, expected ({k}, d)")
        d = mu.shape[1]
        if sigma.shape != (k, d, d):
            raise ValidationError(f"sigma has shape {sigma.shape}, expected ({k}, {d}, {d})")
        for array in (alpha, mu, sigma):
            array.setflags(write=False)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)

    @property
    def n_components(self) -> int:
        return self.alpha.size

    @property
    def n_features(self) -> int:
        return self.mu.shape[1]

    def validate(self) -> None:
        if np.any(self.alpha < 0) or abs(self.alpha.sum() - 1.0) > ALPHA_TOLERANCE:
            raise ValidationError(f"mixing weights must be non-negative and sum to 1, got {self.alpha.tolist()}")
        for component, cov in enumerate(self.sigma):
            if not np.allclose(cov, cov.T):
                raise ValidationError(f"covariance of component {component} is not symmetric")
            try:
                np.linalg.cholesky(cov)
            except np.linalg.LinAlgError:
                raise ValidationError(f"covariance of component {component} is not positive definite") from None

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha.tolist(),
            "mu": self.mu.tolist(),
            "sigma": self.sigma.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'MixtureParams':
        return cls(alpha=data["alpha"], mu=data["mu"], sigma=data["sigma"])


def component_log_densities(points: np.ndarray, params: MixtureParams) -> np.ndarray:
    """N x K matrix of log f(x_i; mu_l, Sigma_l), using the inverse covariance (Mahalanobis form)."""
    densities = np.empty((points.shape[0], params.n_components))
    for component in range(params.n_components):
        try:
            density = multivariate_normal(mean=params.mu[component], cov=params.sigma[component])
        except (np.linalg.LinAlgError, ValueError) as e:
            logger.error(f"Covariance of component {component} cannot be inverted: {e}")
            raise ConvergenceError(f"covariance of component {component} is singular: {e}",
                                   component=component) from e
        densities[:, component] = np.atleast_1d(density.logpdf(points))
    return densities


def weighted_log_densities(points: np.ndarray, params: MixtureParams) -> np.ndarray:
    """N x K matrix of log(alpha_l) + log f(x_i; mu_l, Sigma_l)."""
    with np.errstate(divide="ignore"):
        log_alpha = np.log(params.alpha)
    return component_log_densities(points, params) + log_alpha


def posterior(points: np.ndarray, params: MixtureParams) -> tuple[np.ndarray, np.ndarray]:
    """
    Posterior responsibilities computed in log space.

    Returns the row-normalized N x K responsibilities and the per-point
    log mixture density log sum_l alpha_l f_l(x_i).
    """
    log_weighted = weighted_log_densities(points, params)
    log_norm = logsumexp(log_weighted, axis=1)
    if not np.all(np.isfinite(log_norm)):
        bad = int(np.nonzero(~np.isfinite(log_norm))[0][0])
        raise ConvergenceError(f"mixture density of point {bad} is not finite")
    return np.exp(log_weighted - log_norm[:, None]), log_norm


def masked_log_likelihood(points: np.ndarray, params: MixtureParams, mask: np.ndarray) -> float:
    """sum_i sum_l mask_il * log(alpha_l f(x_i; mu_l, Sigma_l)); unmasked entries contribute nothing."""
    mask = np.asarray(mask, dtype=float)
    log_weighted = weighted_log_densities(points, params)
    terms = np.where(mask > 0, mask * log_weighted, 0.0)
    return float(terms.sum())


def estimate_params(points: np.ndarray, weights: np.ndarray, cov_reg: float,
                    shrink_small: bool = True) -> MixtureParams:
    """
    Weighted maximum-likelihood estimates of a full-covariance mixture.

    ``weights`` is an N x K matrix (a one-hot or lambda mask in practice).
    alpha is normalized over the total weight, covariances use the weight
    total as denominator and get ``cov_reg * I`` added. With
    ``shrink_small`` a component carrying fewer than d+1 points is pulled
    toward the pooled within-component covariance by
    rho = (d + 1 - n_l) / (d + 1).
    """
    weights = np.asarray(weights, dtype=float)
    n_features = points.shape[1]
    counts = weights.sum(axis=0)
    empty = np.nonzero(counts <= 0)[0]
    if empty.size:
        logger.error(f"Cluster {int(empty[0])} has no training points")
        raise ValidationError(f"cluster {int(empty[0])} has no selected points to estimate parameters from")

    alpha = counts / counts.sum()
    mu = (weights.T @ points) / counts[:, None]
    scatter = np.empty((weights.shape[1], n_features, n_features))
    for component in range(weights.shape[1]):
        diff = points - mu[component]
        scatter[component] = (weights[:, component, None] * diff).T @ diff
    sigma = scatter / counts[:, None, None]

    if shrink_small:
        pooled = scatter.sum(axis=0) / counts.sum()
        for component in range(weights.shape[1]):
            rho = max(0.0, (n_features + 1 - counts[component]) / (n_features + 1))
            if rho > 0:
                logger.debug(f"Shrinking covariance of component {component} "
                             f"({counts[component]:.0f} points) toward pooled covariance, rho={rho:.3f}")
                sigma[component] = rho * pooled + (1.0 - rho) * sigma[component]

    sigma = 0.5 * (sigma + np.transpose(sigma, (0, 2, 1))) + cov_reg * np.eye(n_features)
    return MixtureParams(alpha=alpha, mu=mu, sigma=sigma)


def spherical_params(points: np.ndarray, labels: np.ndarray, k: int, cov_reg: float) -> MixtureParams:
    """
    Hard-partition estimates with one shared spherical variance.

    alpha_l = n_l / N, mu_l = cluster mean and every Sigma_l is
    s^2 * I with s^2 = sum of squared deviations from own mean / (N * d).
    """
    n_points, n_features = points.shape
    counts = np.bincount(labels, minlength=k)
    empty = np.nonzero(counts == 0)[0]
    if empty.size:
        raise ValidationError(f"cluster {int(empty[0])} is empty")
    mu = np.zeros((k, n_features))
    np.add.at(mu, labels, points)
    mu /= counts[:, None]
    variance = float(np.sum((points - mu[labels]) ** 2)) / (n_points * n_features)
    sigma = np.repeat(((variance + cov_reg) * np.eye(n_features))[None], k, axis=0)
    return MixtureParams(alpha=counts / n_points, mu=mu, sigma=sigma)
