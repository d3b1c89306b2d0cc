"""
Experiment grids over algorithm variants, labeling strategies, A% values and seeds.

Every grid cell is run independently with its own seed and appended to
``results.csv`` as soon as it finishes, so an interrupted sweep resumes by
skipping the cells already on disk. Only CSAL variants are crossed with
the labeler and A% axes; every other variant runs once per seed.
"""
import logging
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import lru_cache, partial
from itertools import product
from pathlib import Path

import pandas as pd

from csal_classifier.controller import AlgorithmVariant, RunSettings, run_variant
from csal_classifier.data import BUILTIN_DATASETS, PRESETS, DataMatrix, resolve_dataset
from csal_classifier.errors import CsalError, ValidationError
from csal_classifier.evaluation.metrics import classification_accuracy
from csal_classifier.processing.labeling import DEFAULT_THRESHOLD, LabelerConfig, LabelerType
from csal_classifier.storage.result_storage import ResultSink, cell_key

logger = logging.getLogger(__name__)

DEFAULT_PERCENT_A_GRID = (10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0, 80.0, 90.0)
NO_LABELER = "none"
SUMMARY_METRICS = ("accuracy", "seconds")


@dataclass(frozen=True)
class ExperimentConfig:
    """One sweep: the grid axes, the shared run settings and the output directory."""
    dataset: str | tuple[str, ...] = "gdata1"
    algorithms: tuple[str, ...] = ("gmm-csal",)
    labelers: tuple[str, ...] = ("self_adaptive",)
    percent_a_grid: tuple[float, ...] = (60.0,)
    seeds: tuple[int, ...] = (0,)
    output: str = "results"
    workers: int = 1
    threshold: float = DEFAULT_THRESHOLD
    max_iter: int = 100
    tol: float = 1e-8
    k: int | None = None
    data_seed: int = 0
    standardize: bool | None = None
    repeats: int = 1
    warmup: bool = False

    def __post_init__(self) -> None:
        # JSON hands us lists; keep the config hashable and immutable
        datasets = (self.dataset,) if isinstance(self.dataset, str) else tuple(self.dataset)
        object.__setattr__(self, "dataset", datasets[0] if len(datasets) == 1 else datasets)
        object.__setattr__(self, "algorithms", tuple(self.algorithms))
        object.__setattr__(self, "labelers", tuple(LabelerType.from_name(name).value for name in self.labelers))
        object.__setattr__(self, "percent_a_grid", tuple(float(a) for a in self.percent_a_grid))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))

    @property
    def datasets(self) -> tuple[str, ...]:
        return (self.dataset,) if isinstance(self.dataset, str) else self.dataset

    @property
    def variants(self) -> list[AlgorithmVariant]:
        return [AlgorithmVariant.parse(name) for name in self.algorithms]

    def validate(self) -> None:
        for name, values in (("dataset", self.datasets), ("algorithms", self.algorithms),
                             ("labelers", self.labelers), ("percent_a_grid", self.percent_a_grid),
                             ("seeds", self.seeds)):
            if not values:
                logger.error(f"Experiment config has an empty {name} list")
                raise ValidationError(f"{name} must not be empty")
        for name in self.algorithms:
            AlgorithmVariant.parse(name)
        for percent_a in self.percent_a_grid:
            if not 0 < percent_a <= 100:
                raise ValidationError(f"percent_a values must be in (0, 100], got {percent_a}")
        for source in self.datasets:
            if source.lower() not in PRESETS and source.lower() not in BUILTIN_DATASETS and not Path(source).exists():
                logger.error(f"Dataset {source!r} is neither a known name nor an existing file")
                raise ValidationError(f"dataset {source!r} cannot be resolved")
        if self.workers < 1 or self.repeats < 1:
            raise ValidationError("workers and repeats must be at least 1")
        if self.max_iter < 1 or not self.tol > 0:
            raise ValidationError("max_iter must be at least 1 and tol positive")
        if self.k is not None and self.k < 1:
            raise ValidationError(f"k must be at least 1, got {self.k}")

    def to_dict(self) -> dict:
        values = asdict(self)
        values["dataset"] = self.dataset if isinstance(self.dataset, str) else list(self.dataset)
        for name in ("algorithms", "labelers", "percent_a_grid", "seeds"):
            values[name] = list(values[name])
        return values

    @classmethod
    def from_dict(cls, data: dict) -> 'ExperimentConfig':
        return cls(**data)


@dataclass(frozen=True)
class ExperimentCell:
    dataset: str
    algorithm: str
    labeler: str
    percent_a: float | None
    seed: int

    @property
    def key(self) -> tuple[str, str, str, str, str]:
        return cell_key(self.dataset, self.algorithm, self.labeler, self.percent_a, self.seed)


@dataclass
class CellOutcome:
    """A results row plus the run's artifacts, which only single runs persist."""
    row: dict
    outcome: object = field(default=None, repr=False)


def expand_grid(cfg: ExperimentConfig) -> list[ExperimentCell]:
    """Cartesian product of the grid; the labeler and A% axes collapse for non-CSAL variants."""
    cells = []
    for dataset, variant in product(cfg.datasets, cfg.variants):
        if variant.uses_labeler:
            settings = product(cfg.labelers, cfg.percent_a_grid)
        else:
            settings = [(NO_LABELER, None)]
        for (labeler, percent_a), seed in product(list(settings), cfg.seeds):
            cells.append(ExperimentCell(dataset, variant.name, labeler, percent_a, seed))
    return cells


@lru_cache(maxsize=8)
def _load_dataset(source: str, data_seed: int, standardize: bool | None) -> DataMatrix:
    return resolve_dataset(source, seed=data_seed, standardize_features=standardize)


def _settings_for(cfg: ExperimentConfig, cell: ExperimentCell, data: DataMatrix) -> RunSettings:
    k = cfg.k if cfg.k is not None else data.n_classes
    if k == 0:
        logger.error(f"Dataset {cell.dataset!r} has no labels and the config sets no k")
        raise ValidationError(f"dataset {cell.dataset!r} has no labels; set k explicitly")
    if cell.labeler == NO_LABELER:
        labeler = LabelerConfig(silhouette_threshold=cfg.threshold, seed=cell.seed)
    else:
        labeler = LabelerConfig(strategy=LabelerType.from_name(cell.labeler), percent_a=cell.percent_a,
                                silhouette_threshold=cfg.threshold, seed=cell.seed)
    return RunSettings(k=k, seed=cell.seed, labeler=labeler, max_iter=cfg.max_iter, tol=cfg.tol)


def run_cell(cfg: ExperimentConfig, cell: ExperimentCell, keep_outcome: bool = False) -> CellOutcome:
    """
    Runs one grid cell and never raises for algorithm failures.

    With ``cfg.warmup`` one extra run is discarded first; seconds is the
    median over ``cfg.repeats`` timed runs. Only the algorithm call is
    timed.
    """
    row = {"dataset": cell.dataset, "algorithm": cell.algorithm, "labeler": cell.labeler,
           "percent_a": cell.percent_a, "seed": cell.seed, "accuracy": None, "iterations": None,
           "seconds": None, "converged": None, "error": ""}
    try:
        data = _load_dataset(cell.dataset, cfg.data_seed, cfg.standardize)
        variant = AlgorithmVariant.parse(cell.algorithm)
        settings = _settings_for(cfg, cell, data)
        if cfg.warmup:
            run_variant(data, variant, settings)
        timings = []
        outcome = None
        for _ in range(cfg.repeats):
            start_time = time.perf_counter()
            outcome = run_variant(data, variant, settings)
            timings.append(time.perf_counter() - start_time)
        if data.has_labels:
            row["accuracy"] = classification_accuracy(outcome.partition, data.true_labels)
        row["iterations"] = outcome.iterations
        row["seconds"] = statistics.median(timings)
        row["converged"] = outcome.converged
        return CellOutcome(row, outcome if keep_outcome else None)
    except (CsalError, ArithmeticError, ValueError, FileNotFoundError) as e:
        logger.warning(f"Cell {cell.key} failed: {e}")
        row["error"] = f"{type(e).__name__}: {e}"
        return CellOutcome(row)


def run_experiments(cfg: ExperimentConfig) -> pd.DataFrame:
    """
    Runs every grid cell not already in ``<output>/results.csv``.

    Cells run in a process pool when ``cfg.workers > 1``; rows are appended
    in grid order by this process only. Returns the rows of this grid,
    including those found from an earlier run.
    """
    cfg.validate()
    sink = ResultSink(Path(cfg.output) / "results.csv")
    cells = expand_grid(cfg)
    done = sink.completed_keys()
    pending = [cell for cell in cells if cell.key not in done]
    logger.info(f"Experiment grid has {len(cells)} cells, {len(cells) - len(pending)} already done, "
                f"running {len(pending)} with {cfg.workers} worker(s)")

    worker = partial(run_cell, cfg)
    if cfg.workers > 1 and len(pending) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as executor:
            for index, result in enumerate(executor.map(worker, pending), start=1):
                sink.append(result.row)
                logger.info(f"Finished cell {index} of {len(pending)}")
    else:
        for index, cell in enumerate(pending, start=1):
            sink.append(worker(cell).row)
            logger.info(f"Finished cell {index} of {len(pending)}")

    results = sink.read()
    if results.empty:
        return results
    wanted = {cell.key for cell in cells}
    keys = [cell_key(*values) for values in
            results[["dataset", "algorithm", "labeler", "percent_a", "seed"]].itertuples(index=False)]
    return results[[key in wanted for key in keys]].reset_index(drop=True)


def _successful(results: pd.DataFrame) -> pd.DataFrame:
    if "error" not in results.columns:
        return results
    return results[results["error"].fillna("").astype(str) == ""]


def summarize(results: pd.DataFrame, group_by: list[str] | tuple[str, ...],
              metrics: tuple[str, ...] = SUMMARY_METRICS) -> pd.DataFrame:
    """
    Count, mean, median and std of each metric per group.

    Error rows are left out. The std of a single-row group is 0. Output
    columns are the group keys, ``n`` and ``<metric>_<stat>``.
    """
    group_by = list(group_by)
    unknown = [column for column in group_by + list(metrics) if column not in results.columns]
    if unknown:
        logger.error(f"Cannot summarize by unknown columns {unknown}")
        raise ValidationError(f"unknown column(s) {unknown}; available: {list(results.columns)}")
    if not group_by:
        raise ValidationError("group_by must name at least one column")

    frame = _successful(results).copy()
    for metric in metrics:
        frame[metric] = pd.to_numeric(frame[metric], errors="coerce")
    aggregations = {"n": (metrics[0], "size")}
    for metric in metrics:
        for stat in ("mean", "median", "std"):
            aggregations[f"{metric}_{stat}"] = (metric, stat)
    if frame.empty:
        return pd.DataFrame(columns=group_by + list(aggregations))
    summary = frame.groupby(group_by, dropna=False, sort=True).agg(**aggregations).reset_index()
    std_columns = [f"{metric}_std" for metric in metrics]
    summary[std_columns] = summary[std_columns].fillna(0.0)
    return summary


def timing_table(results: pd.DataFrame) -> pd.DataFrame:
    """Median seconds with one row per algorithm and one column per dataset."""
    frame = _successful(results).copy()
    frame["seconds"] = pd.to_numeric(frame["seconds"], errors="coerce")
    table = frame.pivot_table(index="algorithm", columns="dataset", values="seconds", aggfunc="median")
    table.columns.name = None
    return table.reset_index()
