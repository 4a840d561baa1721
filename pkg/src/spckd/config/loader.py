"""Experiment config files (JSON or YAML)."""

import json
from pathlib import Path
from typing import Any

import structlog
import yaml
from pydantic import ValidationError

from spckd.errors import ConfigError
from spckd.models.config import ExperimentConfig

logger = structlog.get_logger(__name__)

YAML_SUFFIXES = {".yaml", ".yml"}


def load_experiment_config(path: Path, seed: int | None = None) -> ExperimentConfig:
    """Parse and validate an experiment config; ``seed`` overrides the file's.

    Raises:
        ConfigError: Unreadable syntax or values failing validation
    """
    text = path.read_text(encoding="utf-8")
    try:
        raw: Any = yaml.safe_load(text) if path.suffix in YAML_SUFFIXES else json.loads(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ConfigError(f"Cannot parse {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path} must contain a mapping at the top level")
    if seed is not None:
        raw["seed"] = seed
    try:
        config = ExperimentConfig.model_validate(raw)
    except ValidationError as exc:
        raise ConfigError(f"Invalid config {path}: {exc}") from exc
    _resolve_paths(config, path.parent)
    logger.debug("config_loaded", path=str(path), id=config.id, seed=config.seed)
    return config


def _resolve_paths(config: ExperimentConfig, base: Path) -> None:
    if config.data.manifest is not None and not config.data.manifest.is_absolute():
        config.data.manifest = base / config.data.manifest
    ckpt = config.train.teacher_checkpoint
    if ckpt is not None and not ckpt.is_absolute():
        config.train.teacher_checkpoint = base / ckpt


def dump_experiment_config(config: ExperimentConfig, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = config.model_dump(mode="json")
    if path.suffix in YAML_SUFFIXES:
        path.write_text(yaml.safe_dump(payload, sort_keys=False), encoding="utf-8")
    else:
        path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
