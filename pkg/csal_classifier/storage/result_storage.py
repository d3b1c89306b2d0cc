import json
import logging
import math
from pathlib import Path

import numpy as np
import pandas as pd

from csal_classifier.classifiers.base_classifier import SoftPartition
from csal_classifier.classifiers.naive_bayes import NaiveBayesModel
from csal_classifier.errors import DataFormatError
from csal_classifier.processing.labeling import LabeledSubset
from csal_classifier.processing.mixture import MixtureParams

logger = logging.getLogger(__name__)

RESULT_COLUMNS = ("dataset", "algorithm", "labeler", "percent_a", "seed",
                  "accuracy", "iterations", "seconds", "converged", "error")

PARAMS_FORMAT = "csal-classifier/params"
PARAMS_VERSION = 1
PARAMS_KINDS = {"mixture": MixtureParams, "naive_bayes": NaiveBayesModel}


def _format_percent(value) -> str:
    if value is None or value == "":
        return ""
    value = float(value)
    return "" if math.isnan(value) else f"{value:g}"


def cell_key(dataset, algorithm, labeler, percent_a, seed) -> tuple[str, str, str, str, str]:
    """Identity of a grid cell, stable across a write to results.csv and a read back."""
    return str(dataset), str(algorithm), str(labeler), _format_percent(percent_a), str(int(float(seed)))


class ResultSink:
    """Appends result rows to one CSV file, writing the header with the first row."""

    def __init__(self, path: Path | str):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)

    def append(self, row: dict) -> None:
        frame = pd.DataFrame([row], columns=list(RESULT_COLUMNS))
        write_header = not self.path.exists() or self.path.stat().st_size == 0
        frame.to_csv(self.path, mode="a", header=write_header, index=False)

    def read(self) -> pd.DataFrame:
        if not self.path.exists() or self.path.stat().st_size == 0:
            return pd.DataFrame(columns=list(RESULT_COLUMNS))
        frame = pd.read_csv(self.path, dtype=str, keep_default_na=False)
        missing = [column for column in RESULT_COLUMNS if column not in frame.columns]
        if missing:
            logger.error(f"{self.path} is missing result columns {missing}")
            raise DataFormatError(f"{self.path} is not a results file; missing columns {missing}")
        for column in ("percent_a", "accuracy", "seconds"):
            frame[column] = pd.to_numeric(frame[column], errors="coerce")
        frame["iterations"] = pd.to_numeric(frame["iterations"], errors="coerce").astype("Int64")
        frame["seed"] = pd.to_numeric(frame["seed"]).astype(int)
        frame["converged"] = frame["converged"].map({"True": True, "False": False}).astype("boolean")
        return frame

    def completed_keys(self) -> set[tuple[str, str, str, str, str]]:
        """Keys of every row on disk, error rows included."""
        frame = self.read()
        return {cell_key(*values) for values in
                frame[["dataset", "algorithm", "labeler", "percent_a", "seed"]].itertuples(index=False)}


class RunStorage:
    """Writes the artifacts of a single run into one output directory."""

    def __init__(self, output_dir: Path | str = "results"):
        self.output_dir = Path(output_dir)
        self._ensure_directories()

    def _ensure_directories(self) -> None:
        self.output_dir.mkdir(parents=True, exist_ok=True)

    def save_partition(self, partition: SoftPartition, name: str = "partition.csv") -> Path:
        """One row per point: its index, hard cluster and the membership row m0..m(K-1)."""
        frame = pd.DataFrame(partition.memberships,
                             columns=[f"m{l}" for l in range(partition.n_clusters)])
        frame.insert(0, "hard", partition.hard)
        frame.insert(0, "index", np.arange(partition.n_points))
        return self._write_frame(frame, name)

    def save_subset(self, subset: LabeledSubset, name: str = "subset.csv") -> Path:
        frame = pd.DataFrame({"index": np.arange(subset.selected.size),
                              "selected": subset.selected.astype(int),
                              "label": subset.labels})
        return self._write_frame(frame, name)

    def save_trace(self, rows: list[dict], name: str = "trace.csv") -> Path:
        frame = pd.DataFrame(rows) if rows else pd.DataFrame(columns=["iteration"])
        return self._write_frame(frame, name)

    def save_params(self, params: MixtureParams | NaiveBayesModel, name: str = "params.json") -> Path:
        kind = "mixture" if isinstance(params, MixtureParams) else "naive_bayes"
        path = self.output_dir / name
        with open(path, 'w') as f:
            json.dump({"format": PARAMS_FORMAT, "version": PARAMS_VERSION, "kind": kind,
                       "params": params.to_dict()}, f, indent=2)
        logger.info(f"Wrote {kind} parameters to {path}")
        return path

    def _write_frame(self, frame: pd.DataFrame, name: str) -> Path:
        path = self.output_dir / name
        frame.to_csv(path, index=False)
        logger.info(f"Wrote {len(frame)} rows to {path}")
        return path


def load_params(path: Path | str) -> MixtureParams | NaiveBayesModel:
    """Reads a parameter file written by ``RunStorage.save_params``."""
    path = Path(path)
    if not path.exists():
        logger.error(f"Parameter file not found: {path}")
        raise FileNotFoundError(f"Parameter file not found: {path}")
    with open(path, 'r') as f:
        envelope = json.load(f)
    if envelope.get("format") != PARAMS_FORMAT or envelope.get("kind") not in PARAMS_KINDS:
        raise DataFormatError(f"{path} is not a parameter file")
    if envelope.get("version") != PARAMS_VERSION:
        raise DataFormatError(f"{path} has unsupported version {envelope.get('version')}")
    return PARAMS_KINDS[envelope["kind"]].from_dict(envelope["params"])
