from csal_classifier.classifiers.base_classifier import ClusterConfig, Clusterer, ClustererType, SoftPartition
from csal_classifier.classifiers.fuzzy_c_means import FuzzyCMeansClusterer
from csal_classifier.classifiers.gaussian_mixture import GMMClusterer
from csal_classifier.classifiers.k_means import KMeansClusterer

# Clusterer mapping
CLUSTERER_MAP = {
    ClustererType.KMEANS: KMeansClusterer,
    ClustererType.FCM: FuzzyCMeansClusterer,
    ClustererType.GMM: GMMClusterer,
}


def create_clusterer(clusterer_type: ClustererType) -> Clusterer:
    return CLUSTERER_MAP[clusterer_type]()


__all__ = ['ClusterConfig', 'Clusterer', 'ClustererType', 'SoftPartition', 'CLUSTERER_MAP', 'create_clusterer']
