"""E2E and distillation training, optimizers and checkpoints."""

from spckd.training.checkpoint import (
    Checkpoint,
    checkpoint_bytes,
    checkpoint_digest,
    checkpoint_load,
    checkpoint_save,
    parse_checkpoint,
)
from spckd.training.hooks import (
    EpochContext,
    FiniteLossHook,
    HookResult,
    LoggingHook,
    TrainingHook,
    default_hooks,
)
from spckd.training.optimizers import SGD, Adam, Optimizer, OptimizerFactory, optimizer_step
from spckd.training.system import build_system
from spckd.training.trainer import Trainer, mse_loss, system_trace, train_e2e, train_kd

__all__ = [
    "SGD",
    "Adam",
    "Checkpoint",
    "EpochContext",
    "FiniteLossHook",
    "HookResult",
    "LoggingHook",
    "Optimizer",
    "OptimizerFactory",
    "Trainer",
    "TrainingHook",
    "build_system",
    "checkpoint_bytes",
    "checkpoint_digest",
    "checkpoint_load",
    "checkpoint_save",
    "default_hooks",
    "mse_loss",
    "optimizer_step",
    "parse_checkpoint",
    "system_trace",
    "train_e2e",
    "train_kd",
]
