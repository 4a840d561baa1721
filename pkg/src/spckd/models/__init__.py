"""Pydantic models for experiment configuration and results."""

from spckd.models.config import (
    ApertureInit,
    ApertureMode,
    DataConfig,
    DistillConfig,
    ExperimentConfig,
    FeatureKind,
    NoiseKind,
    NoiseSpec,
    OptimizerConfig,
    OptimizerKind,
    ProxConfig,
    Role,
    SensingConfig,
    Split,
    TrainConfig,
)
from spckd.models.checkpoint import CheckpointHeader, TensorEntry
from spckd.models.metrics import MetricRecord

__all__ = [
    "ApertureInit",
    "ApertureMode",
    "CheckpointHeader",
    "DataConfig",
    "DistillConfig",
    "ExperimentConfig",
    "FeatureKind",
    "MetricRecord",
    "NoiseKind",
    "NoiseSpec",
    "OptimizerConfig",
    "OptimizerKind",
    "ProxConfig",
    "Role",
    "SensingConfig",
    "Split",
    "TensorEntry",
    "TrainConfig",
]
