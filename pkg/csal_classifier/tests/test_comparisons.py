"""
Paired comparisons over 20 seeds on fixed datasets.

Every seed drives the base clusterer and the refinement that starts from
it, so each pair of medians compares runs that share their first
partition. Tests whose expectation is not met by the current algorithms
are marked expectedFailure; the measured medians are next to them and in
DESIGN.md.
"""
import statistics
import time
import unittest
from functools import lru_cache

from csal_classifier.classifiers import ClustererType, create_clusterer
from csal_classifier.classifiers.csal import CsalConfig, csal_run
from csal_classifier.controller import AlgorithmVariant, RunSettings, run_variant
from csal_classifier.data import DataMatrix, resolve_dataset
from csal_classifier.evaluation.metrics import classification_accuracy
from csal_classifier.processing.labeling import LabelerConfig, LabelerType

SEEDS = tuple(range(20))
PERCENT_A_GRID = (10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0, 80.0, 90.0)
SINGLE_STRATEGIES = (LabelerType.DISTANCE, LabelerType.ENTROPY)
SLACK = 0.02


@lru_cache(maxsize=None)
def dataset(name: str) -> DataMatrix:
    return resolve_dataset(name, seed=0)


@lru_cache(maxsize=None)
def median_accuracy(name: str, algorithm: str) -> float:
    data = dataset(name)
    variant = AlgorithmVariant.parse(algorithm)
    accuracies = [classification_accuracy(run_variant(data, variant, RunSettings(k=data.n_classes, seed=seed))
                                          .partition, data.true_labels) for seed in SEEDS]
    return statistics.median(accuracies)


@lru_cache(maxsize=None)
def strategy_medians(name: str) -> dict[tuple[LabelerType, float], float]:
    """Median GMM-CSAL accuracy per (labeler, A%), each seed reusing one GMM run for the whole grid."""
    data = dataset(name)
    scores: dict[tuple[LabelerType, float], list[float]] = {}
    for seed in SEEDS:
        base = CsalConfig(k=data.n_classes, clusterer=ClustererType.GMM, seed=seed)
        initial = create_clusterer(ClustererType.GMM).fit(data, base.cluster_config())
        for strategy in LabelerType:
            for percent_a in PERCENT_A_GRID:
                cfg = CsalConfig(k=data.n_classes, clusterer=ClustererType.GMM,
                                 labeler=LabelerConfig(strategy, percent_a=percent_a), seed=seed)
                result = csal_run(data, cfg, initial=initial)
                scores.setdefault((strategy, percent_a), []).append(
                    classification_accuracy(result.partition, data.true_labels))
    return {key: statistics.median(values) for key, values in scores.items()}


def median_seconds(name: str, algorithm: str, seeds: tuple[int, ...] = (0, 1, 2, 3, 4)) -> float:
    data = dataset(name)
    variant = AlgorithmVariant.parse(algorithm)
    run_variant(data, variant, RunSettings(k=data.n_classes, seed=seeds[0]))
    timings = []
    for seed in seeds:
        start_time = time.perf_counter()
        run_variant(data, variant, RunSettings(k=data.n_classes, seed=seed))
        timings.append(time.perf_counter() - start_time)
    return statistics.median(timings)


class TestLabelingStrategies(unittest.TestCase):
    # gdata1 A=10: self-adaptive 0.605, distance 0.785
    # gdata2 misses at A=10, 20, 30 and 70; A=30: self-adaptive 0.753, distance 0.927
    @unittest.expectedFailure
    def test_self_adaptive_keeps_up_with_single_strategies(self):
        misses = []
        for name in ("gdata1", "gdata2"):
            medians = strategy_medians(name)
            wins = 0
            for percent_a in PERCENT_A_GRID:
                adaptive = medians[(LabelerType.SELF_ADAPTIVE, percent_a)]
                singles = [medians[(strategy, percent_a)] for strategy in SINGLE_STRATEGIES]
                misses += [(name, percent_a, adaptive, single) for single in singles if adaptive < single - SLACK]
                wins += any(adaptive > single for single in singles)
            if wins < 3:
                misses.append((name, "wins", wins))
        self.assertEqual(misses, [])

    def test_every_strategy_beats_chance_on_gdata2(self):
        medians = strategy_medians("gdata2")
        for strategy in LabelerType:
            with self.subTest(labeler=strategy.value):
                self.assertGreater(medians[(strategy, 60.0)], 1 / 3)


class TestCsalAgainstBaselines(unittest.TestCase):
    # gdata1: kmeans 0.800 < 0.810, fcm 0.815 < 0.830, gmm 0.825 < 0.830; gdata2 gmm 0.850 < 0.855
    @unittest.expectedFailure
    def test_csal_improves_on_base_clusterer(self):
        misses, improved = [], {}
        for name in ("gdata1", "gdata2", "iris"):
            for clusterer in ("kmeans", "fcm", "gmm"):
                plain, refined = median_accuracy(name, clusterer), median_accuracy(name, f"{clusterer}-csal")
                if refined < plain:
                    misses.append((name, clusterer, refined, plain))
                improved.setdefault(clusterer, 0)
                improved[clusterer] += refined > plain
        misses += [(clusterer, "improved", count) for clusterer, count in improved.items() if count < 2]
        self.assertEqual(misses, [])

    # gdata1 kmeans: kmeans-csal 0.800 < kmeans-cem 0.815
    @unittest.expectedFailure
    def test_csal_matches_cem(self):
        misses = []
        for name in ("gdata1", "gdata2"):
            for clusterer in ("kmeans", "fcm", "gmm"):
                refined, cem = median_accuracy(name, f"{clusterer}-csal"), median_accuracy(name, f"{clusterer}-cem")
                if refined < cem:
                    misses.append((name, clusterer, refined, cem))
        self.assertEqual(misses, [])

    def test_csal_recovers_iris_with_gmm(self):
        self.assertGreaterEqual(median_accuracy("iris", "gmm-csal"), 0.75)

    # sklearn KMeans(n_init=10) reaches a median of 0.497 on gdata2: the diffuse class swallows the others
    @unittest.expectedFailure
    def test_kmeans_separates_gdata2(self):
        self.assertGreaterEqual(median_accuracy("gdata2", "kmeans"), 0.90)


class TestRuntimeOrdering(unittest.TestCase):
    def test_kmeans_csal_is_slower_than_kmeans_cem(self):
        for name in ("gdata1", "gdata2", "iris"):
            with self.subTest(dataset=name):
                self.assertGreater(median_seconds(name, "kmeans-csal"), median_seconds(name, "kmeans-cem"))

    def test_fcm_csal_stays_within_ten_times_fcm(self):
        for name in ("gdata1", "gdata2", "iris"):
            with self.subTest(dataset=name):
                self.assertLess(median_seconds(name, "fcm-csal"), 10 * median_seconds(name, "fcm"))

    # gdata2: gmm-csal takes 1.24 times as long as gmm-cem
    @unittest.expectedFailure
    def test_gmm_csal_costs_about_the_same_as_gmm_cem(self):
        ratios = {name: median_seconds(name, "gmm-csal") / median_seconds(name, "gmm-cem")
                  for name in ("gdata1", "gdata2", "iris")}
        self.assertTrue(all(ratio <= 1.1 for ratio in ratios.values()), ratios)


if __name__ == '__main__':
    unittest.main()
