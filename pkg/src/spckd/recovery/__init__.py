"""ADMM-unrolled recovery network."""

from spckd.recovery.network import (
    ConvLayer,
    ReconstructionTrace,
    RecoveryNet,
    StageOutput,
    StageParams,
    admm_stage,
    prox_apply,
    unrolled_forward,
)

__all__ = [
    "ConvLayer",
    "ReconstructionTrace",
    "RecoveryNet",
    "StageOutput",
    "StageParams",
    "admm_stage",
    "prox_apply",
    "unrolled_forward",
]
