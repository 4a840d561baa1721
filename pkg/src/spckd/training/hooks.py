"""Hooks run before and after every training epoch."""

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any

import structlog


@dataclass
class EpochContext:
    """State handed to hooks for one epoch."""

    run_id: str
    role: str
    epoch: int
    iteration: int
    metrics: dict[str, float] = field(default_factory=dict)


@dataclass
class HookResult:
    """Result from hook execution."""

    success: bool
    abort: bool = False  # stop training after this epoch
    message: str | None = None
    metadata: dict[str, Any] = field(default_factory=dict)


class TrainingHook(ABC):
    """Cross-cutting behaviour around epochs (logging, guards).

    Hooks are sorted by priority; lower runs earlier.
    """

    def __init__(self, priority: int = 100) -> None:
        self._priority = priority

    @property
    def priority(self) -> int:
        return self._priority

    @property
    @abstractmethod
    def name(self) -> str:
        ...

    def before_epoch(self, context: EpochContext) -> HookResult:
        return HookResult(success=True)

    @abstractmethod
    def after_epoch(self, context: EpochContext) -> HookResult:
        ...

    def __lt__(self, other: "TrainingHook") -> bool:
        return self._priority < other._priority


class LoggingHook(TrainingHook):
    """Emit one structured log event per epoch."""

    def __init__(self, priority: int = 100) -> None:
        super().__init__(priority)
        self._logger = structlog.get_logger("spckd.training")

    @property
    def name(self) -> str:
        return "logging"

    def before_epoch(self, context: EpochContext) -> HookResult:
        self._logger.debug("epoch_started", run_id=context.run_id, epoch=context.epoch)
        return HookResult(success=True)

    def after_epoch(self, context: EpochContext) -> HookResult:
        self._logger.info(
            "epoch_completed",
            run_id=context.run_id,
            role=context.role,
            epoch=context.epoch,
            iteration=context.iteration,
            **context.metrics,
        )
        return HookResult(success=True)


class FiniteLossHook(TrainingHook):
    """Abort when an epoch metric is NaN or infinite."""

    def __init__(self, priority: int = 10) -> None:
        super().__init__(priority)

    @property
    def name(self) -> str:
        return "finite-loss"

    def after_epoch(self, context: EpochContext) -> HookResult:
        bad = [key for key, value in context.metrics.items() if not math.isfinite(value)]
        if bad:
            return HookResult(success=False, abort=True, message=f"non-finite metrics: {bad}")
        return HookResult(success=True)


def default_hooks() -> list[TrainingHook]:
    return sorted([FiniteLossHook(), LoggingHook()])
