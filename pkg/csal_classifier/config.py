import json
import logging
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from csal_classifier import __version__
from csal_classifier.errors import ValidationError
from csal_classifier.evaluation.experiments import ExperimentConfig

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"

# Default experiment settings; a config file only needs the keys it changes
DEFAULT_CONFIG = {
    "dataset": "gdata1",
    "algorithms": ["gmm-csal"],
    "labelers": ["self_adaptive"],
    "percent_a_grid": [60.0],
    "seeds": [0],
    "output": "results",
    "workers": 1,
    "threshold": 0.35,
    "max_iter": 100,
    "tol": 1e-8,
    "k": None,
    "data_seed": 0,
    "standardize": None,
    "repeats": 1,
    "warmup": False,
}


@dataclass(frozen=True)
class RunManifest:
    """Everything needed to reproduce an output directory."""
    config_path: str | None
    config: ExperimentConfig
    version: str
    timestamp: str

    def to_dict(self) -> dict:
        return {
            "config_path": self.config_path,
            "config": self.config.to_dict(),
            "version": self.version,
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'RunManifest':
        return cls(
            config_path=data.get("config_path"),
            config=ExperimentConfig.from_dict(merge_config(data["config"])),
            version=data["version"],
            timestamp=data["timestamp"],
        )


def merge_config(values: dict) -> dict:
    """Overlay ``values`` on DEFAULT_CONFIG, rejecting keys it does not know."""
    unknown = sorted(set(values) - set(DEFAULT_CONFIG))
    if unknown:
        logger.error(f"Unknown config keys: {unknown}")
        raise ValidationError(f"unknown config key(s) {unknown}; expected a subset of {sorted(DEFAULT_CONFIG)}")
    merged = DEFAULT_CONFIG.copy()
    merged.update(values)
    return merged


def load_config(path: Path | str) -> ExperimentConfig:
    """
    Load an experiment config from a JSON file.

    A manifest written by ``store_manifest`` is accepted too; its
    ``config`` member is used, so re-running a manifest repeats the run.
    """
    path = Path(path)
    if not path.exists():
        logger.error(f"Config file not found: {path}")
        raise FileNotFoundError(f"Config file not found: {path}")
    try:
        with open(path, 'r') as f:
            values = json.load(f)
    except json.JSONDecodeError as e:
        logger.error(f"Failed to parse config {path}: {e}")
        raise ValidationError(f"{path} is not valid JSON: {e}") from e
    if not isinstance(values, dict):
        raise ValidationError(f"{path} must hold a JSON object")

    if "config" in values and "version" in values:
        logger.info(f"Loading config from manifest {path} (written by version {values['version']})")
        values = values["config"]
    cfg = ExperimentConfig.from_dict(merge_config(values))
    logger.info(f"Successfully loaded config from {path}")
    return cfg


def store_manifest(cfg: ExperimentConfig, config_path: Path | str | None = None,
                   output_dir: Path | str | None = None) -> Path:
    """Writes manifest.json into the output directory, creating it if needed."""
    output_dir = Path(output_dir if output_dir is not None else cfg.output)
    output_dir.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(
        config_path=str(config_path) if config_path is not None else None,
        config=cfg,
        version=__version__,
        timestamp=datetime.now(timezone.utc).isoformat(timespec="seconds"),
    )
    path = output_dir / MANIFEST_NAME
    with open(path, 'w') as f:
        logger.info(f"Storing run manifest at: {path}")
        json.dump(manifest.to_dict(), f, indent=4)
    return path


def load_manifest(path: Path | str) -> RunManifest:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Manifest not found: {path}")
    with open(path, 'r') as f:
        return RunManifest.from_dict(json.load(f))
