import json
import tempfile
import unittest
from pathlib import Path
from unittest.mock import patch
from urllib.error import URLError

import numpy as np
import numpy.testing as npt
import pandas as pd
from sklearn.utils import Bunch

from csal_classifier.data import (
    GDATA1, GDATA2, DataMatrix, GaussianComponent, GaussianSpec, generate_gaussian, load_builtin, load_csv,
    load_gaussian_spec, resolve_dataset, save_csv, standardize,
)
from csal_classifier.errors import DataFormatError, DatasetUnavailableError, ValidationError


class TestDataMatrix(unittest.TestCase):
    def test_rejects_non_finite_points(self):
        with self.assertRaises(ValidationError):
            DataMatrix(points=[[1.0, np.nan]])

    def test_rejects_label_length_mismatch(self):
        with self.assertRaises(ValidationError):
            DataMatrix(points=[[1.0], [2.0]], true_labels=["a"])

    def test_arrays_are_read_only(self):
        data = DataMatrix(points=[[1.0, 2.0]], true_labels=["a"])
        with self.assertRaises(ValueError):
            data.points[0, 0] = 5.0

    def test_counts(self):
        data = DataMatrix(points=np.zeros((4, 3)), true_labels=["a", "b", "a", "c"])
        self.assertEqual(data.n_points, 4)
        self.assertEqual(data.n_features, 3)
        self.assertEqual(data.n_classes, 3)
        self.assertEqual(data.column_names(), ["x1", "x2", "x3"])


class TestGaussianGeneration(unittest.TestCase):
    def test_gdata1_preset_constants(self):
        means = [c.mean for c in GDATA1.components]
        covariances = [np.asarray(c.covariance) for c in GDATA1.components]
        self.assertEqual(means, [(1.0, 1.0), (2.0, 0.0)])
        npt.assert_array_equal(covariances[0], np.diag([1.0, 0.25]))
        npt.assert_array_equal(covariances[1], np.diag([0.8, 1.0]))
        self.assertEqual([c.count for c in GDATA1.components], [100, 100])

    def test_gdata2_preset_constants(self):
        means = [c.mean for c in GDATA2.components]
        covariances = [np.asarray(c.covariance) for c in GDATA2.components]
        self.assertEqual(means, [(0.0, 0.0), (6.0, 6.0), (-10.0, -10.0)])
        npt.assert_array_equal(covariances[0], np.eye(2))
        npt.assert_array_equal(covariances[1], 3 * np.eye(2))
        npt.assert_array_equal(covariances[2], 100 * np.eye(2))
        self.assertEqual([c.count for c in GDATA2.components], [100, 100, 100])

    def test_gdata_shapes(self):
        data = generate_gaussian(GDATA1, seed=7)
        self.assertEqual(data.points.shape, (200, 2))
        self.assertEqual(data.n_classes, 2)
        data = generate_gaussian(GDATA2, seed=1)
        self.assertEqual(data.points.shape, (300, 2))
        self.assertEqual(data.n_classes, 3)

    def test_same_seed_is_bit_identical(self):
        first = generate_gaussian(GDATA2, seed=3)
        second = generate_gaussian(GDATA2, seed=3)
        npt.assert_array_equal(first.points, second.points)
        npt.assert_array_equal(first.true_labels, second.true_labels)
        other = generate_gaussian(GDATA2, seed=4)
        self.assertFalse(np.array_equal(first.points, other.points))

    def test_labels_are_component_indices(self):
        data = generate_gaussian(GDATA1, seed=0)
        npt.assert_array_equal(data.true_labels, np.repeat([0, 1], 100))

    def test_sample_moments_match_components(self):
        # 10,000 points per component; compare within 5 standard errors
        spec = GaussianSpec(tuple(GaussianComponent(c.mean, c.covariance, 10_000) for c in GDATA1.components))
        data = generate_gaussian(spec, seed=11)
        for index, component in enumerate(spec.components):
            block = data.points[data.true_labels == index]
            variances = np.diag(np.asarray(component.covariance))
            std_error = np.sqrt(variances / block.shape[0])
            self.assertTrue(np.all(np.abs(block.mean(axis=0) - component.mean) < 5 * std_error))
            var_error = variances * np.sqrt(2.0 / (block.shape[0] - 1))
            self.assertTrue(np.all(np.abs(block.var(axis=0, ddof=1) - variances) < 5 * var_error))

    def test_small_standard_normal_sample(self):
        spec = GaussianSpec((GaussianComponent((0.0, 0.0), ((1.0, 0.0), (0.0, 1.0)), 5),))
        data = generate_gaussian(spec, seed=2)
        self.assertEqual(data.n_points, 5)
        self.assertTrue(np.all(np.abs(data.points.mean(axis=0)) < 3 / np.sqrt(5)))

    def test_non_positive_definite_covariance_names_component(self):
        spec = GaussianSpec((
            GaussianComponent((0.0, 0.0), ((1.0, 0.0), (0.0, 1.0)), 10),
            GaussianComponent((1.0, 1.0), ((1.0, 2.0), (2.0, 1.0)), 10),
        ))
        with self.assertRaisesRegex(ValidationError, "component 1"):
            generate_gaussian(spec, seed=0)

    def test_total_count_must_cover_components(self):
        spec = GaussianSpec((
            GaussianComponent((0.0,), ((1.0,),), 1),
            GaussianComponent((1.0,), ((1.0,),), 2),
        ))
        with self.assertRaises(ValidationError):
            spec.validate()

    def test_spec_file_round_trip(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "spec.json"
            path.write_text(json.dumps(GDATA2.to_dict()))
            spec = load_gaussian_spec(path)
        npt.assert_array_equal(generate_gaussian(spec, 5).points, generate_gaussian(GDATA2, 5).points)


class TestCsv(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def write(self, text: str) -> Path:
        path = self.dir / "data.csv"
        path.write_text(text)
        return path

    def test_single_row(self):
        data = load_csv(self.write("1.0,2.0,A\n"))
        self.assertEqual(data.n_points, 1)
        self.assertEqual(data.n_features, 2)
        self.assertEqual(list(data.true_labels), ["A"])

    def test_header_is_detected(self):
        data = load_csv(self.write("width,height,kind\n1,2,a\n3,4,b\n"))
        self.assertEqual(data.feature_names, ("width", "height"))
        npt.assert_array_equal(data.points, [[1.0, 2.0], [3.0, 4.0]])

    def test_label_column_by_index(self):
        data = load_csv(self.write("a,1,2\nb,3,4\n"), label_column=0)
        npt.assert_array_equal(data.points, [[1.0, 2.0], [3.0, 4.0]])
        self.assertEqual(list(data.true_labels), ["a", "b"])

    def test_unlabeled(self):
        data = load_csv(self.write("1,2\n3,4\n"), label_column=None)
        self.assertFalse(data.has_labels)

    def test_unparseable_cell_reports_position(self):
        with self.assertRaises(DataFormatError) as ctx:
            load_csv(self.write("1.0,x,A\n"))
        self.assertEqual(ctx.exception.row, 1)
        self.assertEqual(ctx.exception.column, 2)

    def test_unparseable_cell_after_header(self):
        with self.assertRaises(DataFormatError) as ctx:
            load_csv(self.write("a,b,label\n1,2,x\n3,oops,y\n"))
        self.assertEqual(ctx.exception.row, 3)
        self.assertEqual(ctx.exception.column, 2)

    def test_ragged_rows(self):
        with self.assertRaises(DataFormatError):
            load_csv(self.write("1,2,A\n3,4,5,B\n"))

    def test_missing_file(self):
        with self.assertRaises(FileNotFoundError):
            load_csv(self.dir / "missing.csv")

    def test_save_then_load(self):
        original = generate_gaussian(GDATA1, seed=4)
        path = self.dir / "gdata1.csv"
        save_csv(original, path)
        loaded = load_csv(path)
        npt.assert_allclose(loaded.points, original.points, rtol=0, atol=1e-12)
        self.assertEqual(list(loaded.true_labels), [str(v) for v in original.true_labels])
        self.assertEqual(loaded.feature_names, ("x1", "x2"))


class TestStandardize(unittest.TestCase):
    def test_two_values(self):
        data = standardize(DataMatrix(points=[[1.0], [3.0]]))
        sigma = np.std([1.0, 3.0], ddof=1)
        npt.assert_allclose(data.points[:, 0], [-1 / sigma, 1 / sigma])

    def test_constant_column_is_centered(self):
        data = standardize(DataMatrix(points=[[5.0, 1.0], [5.0, 2.0], [5.0, 4.0]]))
        npt.assert_array_equal(data.points[:, 0], [0.0, 0.0, 0.0])

    def test_needs_two_points(self):
        with self.assertRaises(ValidationError):
            standardize(DataMatrix(points=[[1.0, 2.0]]))

    def test_iris_columns(self):
        data = standardize(load_builtin("iris"))
        npt.assert_allclose(data.points.mean(axis=0), 0.0, atol=1e-12)
        npt.assert_allclose(data.points.std(axis=0, ddof=1), 1.0)
        self.assertEqual(data.n_classes, 3)

    def test_idempotent(self):
        once = standardize(load_builtin("wine"))
        twice = standardize(once)
        npt.assert_allclose(twice.points, once.points, atol=1e-12)


class TestResolveDataset(unittest.TestCase):
    def test_presets_are_not_standardized(self):
        data = resolve_dataset("gdata1", seed=7)
        npt.assert_array_equal(data.points, generate_gaussian(GDATA1, 7).points)

    def test_builtin_is_standardized(self):
        data = resolve_dataset("iris")
        self.assertEqual(data.points.shape, (150, 4))
        npt.assert_allclose(data.points.mean(axis=0), 0.0, atol=1e-12)

    def test_standardization_can_be_disabled(self):
        data = resolve_dataset("iris", standardize_features=False)
        npt.assert_array_equal(data.points, load_builtin("iris").points)


def load_or_skip(test: unittest.TestCase, name: str) -> DataMatrix:
    try:
        return load_builtin(name)
    except DatasetUnavailableError as e:
        test.skipTest(str(e))


class TestOpenmlDatasets(unittest.TestCase):
    def fake_bunch(self) -> Bunch:
        frame = pd.DataFrame({
            "age": [63.0, 37.0, 41.0, 56.0],
            "sex": pd.Categorical(["1", "0", "1", "1"]),
            "note": ["a", "b", "c", "d"],
        })
        return Bunch(data=frame, target=pd.Series(["present", "absent", "absent", "present"], dtype="category"))

    def test_numeric_and_coded_columns_are_kept(self):
        with patch("csal_classifier.data.fetch_openml", return_value=self.fake_bunch()) as fetch:
            with self.assertLogs("csal_classifier.data", level="WARNING") as logs:
                data = load_builtin("heart")
        fetch.assert_called_once_with(name="heart-statlog", version=1, as_frame=True, parser="auto")
        self.assertEqual(data.feature_names, ("age", "sex"))
        npt.assert_array_equal(data.points, [[63.0, 1.0], [37.0, 0.0], [41.0, 1.0], [56.0, 1.0]])
        npt.assert_array_equal(data.true_labels, ["present", "absent", "absent", "present"])
        self.assertEqual(data.n_classes, 2)
        self.assertTrue(any("note" in line for line in logs.output))

    def test_failed_download(self):
        with patch("csal_classifier.data.fetch_openml", side_effect=URLError("no route to host")):
            with self.assertRaises(DatasetUnavailableError) as raised:
                resolve_dataset("thyroid")
        self.assertIsInstance(raised.exception, OSError)
        self.assertIn("thyroid", str(raised.exception))

    def test_unknown_name(self):
        with self.assertRaises(ValidationError):
            load_builtin("glass")

    def test_heart_shape(self):
        data = load_or_skip(self, "heart")
        self.assertEqual(data.points.shape, (270, 13))
        self.assertEqual(data.n_classes, 2)

    def test_thyroid_shape(self):
        data = load_or_skip(self, "thyroid")
        self.assertEqual(data.points.shape, (215, 5))
        self.assertEqual(data.n_classes, 3)


if __name__ == '__main__':
    unittest.main()
