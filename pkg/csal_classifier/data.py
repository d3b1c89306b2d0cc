import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd
from sklearn.datasets import fetch_openml, load_iris, load_wine

from csal_classifier.errors import DataFormatError, DatasetUnavailableError, ValidationError

logger = logging.getLogger(__name__)

LABEL_HEADER = "label"


@dataclass(frozen=True, eq=False)
class DataMatrix:
    """
    An N x d observation matrix with optional ground-truth labels.

    The labels are only ever read by the evaluation code; no clustering or
    labeling routine looks at them. Arrays are copied and frozen on
    construction so a DataMatrix can be shared between threads and processes.
    """
    points: np.ndarray
    true_labels: np.ndarray | None = None
    feature_names: tuple[str, ...] | None = None
    name: str = "data"

    def __post_init__(self) -> None:
        points = np.array(self.points, dtype=float)
        if points.ndim != 2 or points.shape[0] < 1 or points.shape[1] < 1:
            raise ValidationError(f"points must be a non-empty N x d matrix, got shape {points.shape}")
        if not np.all(np.isfinite(points)):
            raise ValidationError("points contain NaN or infinite values")
        points.setflags(write=False)
        object.__setattr__(self, "points", points)

        if self.true_labels is not None:
            labels = np.array(self.true_labels)
            if labels.shape != (points.shape[0],):
                raise ValidationError(
                    f"true_labels has shape {labels.shape}, expected ({points.shape[0]},)")
            labels.setflags(write=False)
            object.__setattr__(self, "true_labels", labels)

        if self.feature_names is not None:
            names = tuple(str(n) for n in self.feature_names)
            if len(names) != points.shape[1]:
                raise ValidationError(f"{len(names)} feature names given for {points.shape[1]} features")
            object.__setattr__(self, "feature_names", names)

    @property
    def n_points(self) -> int:
        return self.points.shape[0]

    @property
    def n_features(self) -> int:
        return self.points.shape[1]

    @property
    def has_labels(self) -> bool:
        return self.true_labels is not None

    @property
    def n_classes(self) -> int:
        """Number of distinct ground-truth classes (0 when unlabeled)."""
        if self.true_labels is None:
            return 0
        return len(np.unique(self.true_labels))

    def column_names(self) -> list[str]:
        if self.feature_names is not None:
            return list(self.feature_names)
        return [f"x{j + 1}" for j in range(self.n_features)]


@dataclass(frozen=True, eq=False)
class GaussianComponent:
    mean: tuple[float, ...]
    covariance: tuple[tuple[float, ...], ...]
    count: int


@dataclass(frozen=True, eq=False)
class GaussianSpec:
    """Parameters of a synthetic Gaussian dataset, one entry per class."""
    components: tuple[GaussianComponent, ...] = field(default_factory=tuple)

    def validate(self) -> None:
        if not self.components:
            raise ValidationError("a Gaussian spec needs at least one component")
        dim = len(self.components[0].mean)
        if dim < 1:
            raise ValidationError("component 0 has an empty mean vector")
        for index, component in enumerate(self.components):
            mean = np.asarray(component.mean, dtype=float)
            cov = np.asarray(component.covariance, dtype=float)
            if mean.shape != (dim,):
                raise ValidationError(f"component {index}: mean has dimension {mean.size}, expected {dim}")
            if cov.shape != (dim, dim):
                raise ValidationError(f"component {index}: covariance has shape {cov.shape}, expected ({dim}, {dim})")
            if not np.allclose(cov, cov.T):
                raise ValidationError(f"component {index}: covariance is not symmetric")
            try:
                np.linalg.cholesky(cov)
            except np.linalg.LinAlgError:
                logger.error(f"Covariance of component {index} is not positive definite")
                raise ValidationError(f"component {index}: covariance is not positive definite") from None
            if int(component.count) < 1:
                raise ValidationError(f"component {index}: count must be positive, got {component.count}")
        total = sum(int(c.count) for c in self.components)
        if total < 2 * len(self.components):
            raise ValidationError(
                f"total count {total} is below twice the number of components ({len(self.components)})")

    @property
    def dimension(self) -> int:
        return len(self.components[0].mean)

    def to_dict(self) -> dict:
        return {
            "components": [
                {"mean": list(c.mean), "covariance": [list(row) for row in c.covariance], "count": int(c.count)}
                for c in self.components
            ]
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'GaussianSpec':
        try:
            components = tuple(
                GaussianComponent(
                    mean=tuple(float(v) for v in item["mean"]),
                    covariance=tuple(tuple(float(v) for v in row) for row in item["covariance"]),
                    count=int(item["count"]),
                )
                for item in data["components"]
            )
        except (KeyError, TypeError, ValueError) as e:
            raise ValidationError(f"malformed Gaussian spec: {e}") from e
        return cls(components)


def _diagonal(*values: float) -> tuple[tuple[float, ...], ...]:
    return tuple(tuple(v if i == j else 0.0 for j in range(len(values))) for i, v in enumerate(values))


# Two overlapping bivariate classes, 100 points each
GDATA1 = GaussianSpec((
    GaussianComponent((1.0, 1.0), _diagonal(1.0, 0.25), 100),
    GaussianComponent((2.0, 0.0), _diagonal(0.8, 1.0), 100),
))

# Two compact classes plus one very diffuse class, 100 points each
GDATA2 = GaussianSpec((
    GaussianComponent((0.0, 0.0), _diagonal(1.0, 1.0), 100),
    GaussianComponent((6.0, 6.0), _diagonal(3.0, 3.0), 100),
    GaussianComponent((-10.0, -10.0), _diagonal(100.0, 100.0), 100),
))

PRESETS: dict[str, GaussianSpec] = {"gdata1": GDATA1, "gdata2": GDATA2}

BUILTIN_LOADERS = {"iris": load_iris, "wine": load_wine}

# (OpenML name, version) of the UCI datasets scikit-learn does not bundle
OPENML_DATASETS: dict[str, tuple[str, int]] = {"heart": ("heart-statlog", 1), "thyroid": ("thyroid-new", 1)}

BUILTIN_DATASETS = (*BUILTIN_LOADERS, *OPENML_DATASETS)


def generate_gaussian(spec: GaussianSpec, seed: int, name: str = "gaussian") -> DataMatrix:
    """
    Draws every component's points i.i.d. from its multivariate normal.

    Samples are ``mean + z @ L.T`` with ``L`` the Cholesky factor of the
    covariance and ``z`` standard normals, so the output only depends on
    the spec and the seed. Labels are the component indices.
    """
    spec.validate()
    rng = np.random.default_rng(seed)
    blocks = []
    labels = []
    for index, component in enumerate(spec.components):
        mean = np.asarray(component.mean, dtype=float)
        factor = np.linalg.cholesky(np.asarray(component.covariance, dtype=float))
        z = rng.standard_normal((int(component.count), mean.size))
        blocks.append(mean + z @ factor.T)
        labels.append(np.full(int(component.count), index, dtype=int))

    data = DataMatrix(
        points=np.vstack(blocks),
        true_labels=np.concatenate(labels),
        feature_names=tuple(f"x{j + 1}" for j in range(spec.dimension)),
        name=name,
    )
    logger.info(f"Generated {data.n_points} points in {data.n_features} dimensions "
                f"from {len(spec.components)} Gaussian components (seed={seed})")
    return data


def load_gaussian_spec(path: Path | str) -> GaussianSpec:
    """Reads a JSON spec file of the form {"components": [{"mean", "covariance", "count"}, ...]}."""
    path = Path(path)
    if not path.exists():
        logger.error(f"Spec file not found: {path}")
        raise FileNotFoundError(f"Spec file not found: {path}")
    with open(path, 'r') as f:
        try:
            raw = json.load(f)
        except json.JSONDecodeError as e:
            raise ValidationError(f"spec file {path} is not valid JSON: {e}") from e
    spec = GaussianSpec.from_dict(raw)
    spec.validate()
    return spec


def _is_number(text: str) -> bool:
    try:
        float(text)
    except (TypeError, ValueError):
        return False
    return True


def load_csv(path: Path | str, label_column: int | str | None = "last") -> DataMatrix:
    """
    Loads a comma-separated dataset.

    A first row in which no cell parses as a number is taken as a header.
    ``label_column`` is a 0-based column index, ``"last"`` or ``None`` for
    unlabeled files. Every other column must be numeric; errors report the
    1-based file row and column of the offending cell.
    """
    path = Path(path)
    if not path.exists():
        logger.error(f"Dataset file not found: {path}")
        raise FileNotFoundError(f"Dataset file not found: {path}")

    try:
        frame = pd.read_csv(path, header=None, dtype=str, keep_default_na=False, skipinitialspace=True)
    except pd.errors.EmptyDataError as e:
        raise DataFormatError(f"{path} is empty") from e
    except pd.errors.ParserError as e:
        logger.error(f"Ragged rows in {path}: {e}")
        raise DataFormatError(f"{path} has ragged rows: {e}") from e

    first_row = [str(v).strip() for v in frame.iloc[0]]
    has_header = not any(_is_number(v) for v in first_row)
    header = first_row if has_header else None
    body = frame.iloc[1:] if has_header else frame
    first_line = 2 if has_header else 1
    if body.empty:
        raise DataFormatError(f"{path} has no data rows")

    missing = body.isna().to_numpy()
    if missing.any():
        row = int(np.nonzero(missing.any(axis=1))[0][0])
        raise DataFormatError(f"{path} has ragged rows: row {row + first_line} has too few fields",
                              row=row + first_line)

    n_columns = body.shape[1]
    if label_column is None:
        label_index = None
    elif label_column == "last":
        label_index = n_columns - 1
    else:
        label_index = int(label_column)
        if label_index < 0:
            label_index += n_columns
        if not 0 <= label_index < n_columns:
            raise ValidationError(f"label column {label_column} is out of range for {n_columns} columns")

    feature_columns = [j for j in range(n_columns) if j != label_index]
    if not feature_columns:
        raise DataFormatError(f"{path} has no feature columns")

    features = body.iloc[:, feature_columns].apply(lambda col: pd.to_numeric(col.str.strip(), errors="coerce"))
    values = features.to_numpy(dtype=float)
    bad = ~np.isfinite(values)
    if bad.any():
        rows, cols = np.nonzero(bad)
        row, col = int(rows[0]) + first_line, feature_columns[int(cols[0])] + 1
        cell = body.iat[int(rows[0]), feature_columns[int(cols[0])]]
        logger.error(f"Unparseable cell {cell!r} in {path} at row {row}, column {col}")
        raise DataFormatError(f"cannot parse {cell!r} as a number at row {row}, column {col}", row=row, column=col)

    labels = None
    if label_index is not None:
        labels = body.iloc[:, label_index].str.strip().to_numpy(dtype=str)

    names = tuple(header[j] for j in feature_columns) if header is not None else None
    data = DataMatrix(points=values, true_labels=labels, feature_names=names, name=path.stem)
    logger.info(f"Loaded {data.n_points} x {data.n_features} dataset from {path}")
    return data


def save_csv(data: DataMatrix, path: Path | str) -> None:
    """Writes the dataset in the dialect ``load_csv`` reads: header row, label last."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame(data.points, columns=data.column_names())
    if data.true_labels is not None:
        frame[LABEL_HEADER] = data.true_labels
    frame.to_csv(path, index=False)
    logger.info(f"Wrote {data.n_points} rows to {path}")


def standardize(data: DataMatrix) -> DataMatrix:
    """
    Z-scores every feature column with the N-1 standard deviation.

    Zero-variance columns are only centered. Labels pass through unchanged.
    """
    if data.n_points < 2:
        raise ValidationError("standardize needs at least 2 points")
    mean = data.points.mean(axis=0)
    std = data.points.std(axis=0, ddof=1)
    scale = np.where(std > 0, std, 1.0)
    return DataMatrix(
        points=(data.points - mean) / scale,
        true_labels=data.true_labels,
        feature_names=data.feature_names,
        name=data.name,
    )


def _load_openml(key: str) -> DataMatrix:
    name, version = OPENML_DATASETS[key]
    try:
        bunch = fetch_openml(name=name, version=version, as_frame=True, parser="auto")
    except (OSError, ValueError) as e:
        logger.error(f"Could not fetch {name!r} (version {version}) from OpenML: {e}")
        raise DatasetUnavailableError(
            f"dataset {key!r} is fetched from OpenML ({name}) and is not available: {e}") from e

    # nominal columns with numeric codes are kept, anything else is dropped
    features = bunch.data.apply(lambda col: pd.to_numeric(col.astype(str), errors="coerce"))
    numeric = [column for column in features.columns if features[column].notna().all()]
    if len(numeric) < features.shape[1]:
        logger.warning(f"Dropping non-numeric columns from {key}: {sorted(set(features.columns) - set(numeric))}")
    if not numeric:
        raise DataFormatError(f"dataset {key!r} has no numeric feature columns")
    labels = bunch.target.astype(str).to_numpy(dtype=str)
    return DataMatrix(points=features[numeric].to_numpy(dtype=float), true_labels=labels,
                      feature_names=tuple(str(column) for column in numeric), name=key)


def load_builtin(name: str) -> DataMatrix:
    """
    Loads a named UCI dataset.

    iris and wine ship with scikit-learn. heart and thyroid are fetched from
    OpenML on first use and cached by scikit-learn; without network access
    and without a cached copy they raise DatasetUnavailableError.
    """
    key = name.lower()
    if key in OPENML_DATASETS:
        return _load_openml(key)
    if key not in BUILTIN_LOADERS:
        raise ValidationError(f"unknown built-in dataset {name!r}; expected one of {sorted(BUILTIN_DATASETS)}")
    bunch = BUILTIN_LOADERS[key]()
    labels = np.asarray(bunch.target_names)[bunch.target].astype(str)
    return DataMatrix(points=bunch.data, true_labels=labels, feature_names=tuple(bunch.feature_names), name=key)


def resolve_dataset(source: str, seed: int = 0, standardize_features: bool | None = None) -> DataMatrix:
    """
    Turns a dataset name or path into a DataMatrix.

    ``gdata1``/``gdata2`` are generated from their presets with ``seed``,
    ``iris``/``wine``/``heart``/``thyroid`` go through ``load_builtin`` and
    anything else is read as a CSV path with the label in the last column. With
    ``standardize_features=None`` real datasets are z-scored and the
    synthetic presets are left as generated.
    """
    key = str(source).lower()
    if key in PRESETS:
        data = generate_gaussian(PRESETS[key], seed, name=key)
        synthetic = True
    elif key in BUILTIN_DATASETS:
        data = load_builtin(key)
        synthetic = False
    else:
        data = load_csv(source, label_column="last")
        synthetic = False

    apply_standardize = (not synthetic) if standardize_features is None else standardize_features
    if apply_standardize:
        data = standardize(data)
    logger.info(f"Resolved dataset {source!r}: N={data.n_points}, d={data.n_features}, "
                f"classes={data.n_classes}, standardized={apply_standardize}")
    return data
