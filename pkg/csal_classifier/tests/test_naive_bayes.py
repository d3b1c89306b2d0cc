import unittest

import numpy as np
import numpy.testing as npt

from csal_classifier.classifiers.naive_bayes import VARIANCE_FLOOR, NaiveBayesModel, nb_classify, nb_train
from csal_classifier.data import DataMatrix
from csal_classifier.errors import ValidationError
from csal_classifier.processing.labeling import LabeledSubset
from csal_classifier.tests.test_clustering import three_blobs


def subset_of(labels, selected=None, k=None) -> LabeledSubset:
    labels = np.asarray(labels)
    selected = np.ones(labels.size, dtype=bool) if selected is None else np.asarray(selected)
    return LabeledSubset(selected=selected, labels=labels, n_clusters=k or int(labels.max()) + 1)


class TestNaiveBayesTraining(unittest.TestCase):
    def test_one_class_one_feature(self):
        model = nb_train(DataMatrix(points=[[0.0], [2.0]]), subset_of([0, 0]))
        npt.assert_allclose(model.priors, [1.0])
        npt.assert_allclose(model.means, [[1.0]])
        npt.assert_allclose(model.variances, [[1.0]])

    def test_balanced_priors(self):
        data = DataMatrix(points=[[0.0], [1.0], [5.0], [6.0]])
        model = nb_train(data, subset_of([0, 0, 1, 1]))
        npt.assert_allclose(model.priors, [0.5, 0.5])

    def test_matches_column_statistics(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            k, d = int(rng.integers(1, 4)), int(rng.integers(1, 4))
            labels = np.concatenate([np.repeat(np.arange(k), 2), rng.integers(0, k, 10)])
            selected = np.concatenate([np.ones(2 * k, dtype=bool), rng.random(10) < 0.6])
            data = DataMatrix(points=rng.standard_normal((labels.size, d)))
            model = nb_train(data, subset_of(labels, selected, k))
            total = selected.sum()
            for cls in range(k):
                rows = data.points[selected & (labels == cls)]
                self.assertAlmostEqual(model.priors[cls], len(rows) / total, delta=1e-12)
                npt.assert_allclose(model.means[cls], rows.mean(axis=0), rtol=0, atol=1e-10)
                npt.assert_allclose(model.variances[cls], np.maximum(rows.var(axis=0), VARIANCE_FLOOR),
                                    rtol=0, atol=1e-10)

    def test_variance_floor(self):
        model = nb_train(DataMatrix(points=[[1.0], [1.0], [3.0]]), subset_of([0, 0, 1]))
        self.assertEqual(model.variances[0, 0], VARIANCE_FLOOR)
        self.assertEqual(model.variances[1, 0], VARIANCE_FLOOR)

    def test_empty_class(self):
        data = DataMatrix(points=[[0.0], [1.0], [2.0]])
        with self.assertRaises(ValidationError):
            nb_train(data, subset_of([0, 0, 1], selected=[True, True, False]))

    def test_dict_round_trip(self):
        model = nb_train(three_blobs(seed=0), subset_of(np.repeat([0, 1, 2], 30)))
        restored = NaiveBayesModel.from_dict(model.to_dict())
        npt.assert_array_equal(restored.means, model.means)
        npt.assert_array_equal(restored.variances, model.variances)


class TestNaiveBayesClassification(unittest.TestCase):
    def test_point_at_tight_class_mean(self):
        model = NaiveBayesModel(priors=[0.5, 0.5], means=[[0.0], [10.0]], variances=[[0.01], [1.0]])
        partition = nb_classify(model, DataMatrix(points=[[0.0]]))
        self.assertGreater(partition.memberships[0, 0], 0.999)

    def test_symmetric_midpoint(self):
        model = NaiveBayesModel(priors=[0.5, 0.5], means=[[-1.0, 0.0], [1.0, 0.0]], variances=[[1.0, 1.0]] * 2)
        partition = nb_classify(model, DataMatrix(points=[[0.0, 2.0]]))
        npt.assert_allclose(partition.memberships, [[0.5, 0.5]])

    def test_matches_direct_density_product(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            k, d, n = int(rng.integers(2, 4)), int(rng.integers(1, 4)), int(rng.integers(1, 5))
            priors = rng.dirichlet(np.ones(k))
            means = rng.standard_normal((k, d))
            variances = rng.uniform(0.5, 2.0, (k, d))
            points = rng.standard_normal((n, d))
            joint = np.array([[priors[c] * np.prod(np.exp(-(x - means[c]) ** 2 / (2 * variances[c]))
                                                   / np.sqrt(2 * np.pi * variances[c])) for c in range(k)]
                              for x in points])
            expected = joint / joint.sum(axis=1, keepdims=True)
            model = NaiveBayesModel(priors=priors, means=means, variances=variances)
            npt.assert_allclose(nb_classify(model, DataMatrix(points=points)).memberships, expected,
                                rtol=0, atol=1e-10)

    def test_reproduces_separated_training_labels(self):
        data = three_blobs(seed=2)
        labels = np.repeat([0, 1, 2], 30)
        partition = nb_classify(nb_train(data, subset_of(labels)), data)
        npt.assert_array_equal(partition.hard, labels)
        npt.assert_allclose(partition.memberships.sum(axis=1), 1.0)


if __name__ == '__main__':
    unittest.main()
