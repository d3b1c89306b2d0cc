import logging
import time
import warnings

import numpy as np
from sklearn.exceptions import ConvergenceWarning
from sklearn.mixture import GaussianMixture

from csal_classifier.classifiers.base_classifier import ClusterConfig, Clusterer, SoftPartition
from csal_classifier.classifiers.k_means import KMeansClusterer
from csal_classifier.data import DataMatrix
from csal_classifier.errors import ConvergenceError
from csal_classifier.processing.mixture import MixtureParams, estimate_params

logger = logging.getLogger(__name__)


def _first_bad_component(model: GaussianMixture) -> int | None:
    for component in range(model.n_components):
        if not (np.isfinite(model.weights_[component])
                and np.all(np.isfinite(model.means_[component]))
                and np.all(np.isfinite(model.covariances_[component]))):
            return component
    return None


class GMMClusterer(Clusterer):
    def fit(self, data: DataMatrix, cfg: ClusterConfig) -> SoftPartition:
        partition, _ = self.fit_mixture(data, cfg)
        return partition

    def fit_mixture(self, data: DataMatrix, cfg: ClusterConfig) -> tuple[SoftPartition, MixtureParams]:
        """
        Full-covariance EM started from a k-means run with the same seed.

        scikit-learn's GaussianMixture is stepped one EM iteration per fit()
        call through warm_start, so the log-likelihood after every M-step is
        recorded. reg_covar adds cov_reg * I to each covariance after every
        M-step.
        """
        cfg.validate(data.n_points)
        start_time = time.perf_counter()
        points = data.points
        logger.info(f"Starting GMM EM with k={cfg.k} on {data.n_points} points (seed={cfg.seed})")

        init = KMeansClusterer().fit(data, cfg)
        start = estimate_params(points, init.one_hot(), cfg.cov_reg)
        precisions = np.linalg.inv(start.sigma)
        model = GaussianMixture(
            n_components=cfg.k,
            covariance_type="full",
            reg_covar=cfg.cov_reg,
            max_iter=1,
            tol=0.0,
            n_init=1,
            init_params="random_from_data",
            weights_init=start.alpha,
            means_init=start.mu,
            precisions_init=0.5 * (precisions + np.transpose(precisions, (0, 2, 1))),
            warm_start=True,
            random_state=cfg.seed,
        )

        trace: list[float] = []
        converged = False
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ConvergenceWarning)
            for iteration in range(1, cfg.max_iter + 1):
                try:
                    model.fit(points)
                except (ValueError, np.linalg.LinAlgError) as e:
                    logger.error(f"GMM EM failed at iteration {iteration}: {e}")
                    raise ConvergenceError(f"GMM EM failed at iteration {iteration}: {e}",
                                           iteration=iteration, component=_first_bad_component(model)) from e

                log_likelihood = float(model.score(points)) * data.n_points
                if not np.isfinite(log_likelihood):
                    component = _first_bad_component(model)
                    logger.error(f"GMM log-likelihood is not finite at iteration {iteration} (component {component})")
                    raise ConvergenceError(
                        f"GMM log-likelihood is not finite at iteration {iteration} (component {component})",
                        iteration=iteration, component=component)
                trace.append(log_likelihood)
                logger.debug(f"GMM iteration {iteration}: log-likelihood={log_likelihood:.6f}")

                if len(trace) > 1 and abs(trace[-1] - trace[-2]) <= cfg.tol * max(1.0, abs(trace[-1])):
                    converged = True
                    break

        if not converged:
            logger.warning(f"GMM EM reached max_iter={cfg.max_iter} without converging")

        params = MixtureParams(alpha=model.weights_, mu=model.means_, sigma=model.covariances_)
        partition = SoftPartition(
            memberships=model.predict_proba(points),
            centers=model.means_,
            objective_trace=tuple(trace),
            iterations=len(trace),
            converged=converged,
        )
        logger.info(f"GMM EM finished after {len(trace)} iterations in "
                    f"{time.perf_counter() - start_time:.3f} seconds")
        return partition, params


def gmm_em(data: DataMatrix, cfg: ClusterConfig) -> tuple[SoftPartition, MixtureParams]:
    return GMMClusterer().fit_mixture(data, cfg)
