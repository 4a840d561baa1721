"""Gradient-descent optimizers and their registry."""

from abc import ABC, abstractmethod
from collections.abc import Sequence
from typing import Any, ClassVar

import numpy as np
from numpy.typing import NDArray

from spckd.errors import ConfigError, UsageError
from spckd.models.config import OptimizerConfig, OptimizerKind
from spckd.numerics.tensor import Parameter


class Optimizer(ABC):
    """Updates a fixed list of parameters from their populated gradients."""

    def __init__(self, params: Sequence[Parameter], config: OptimizerConfig) -> None:
        self.params = [p for p in params if p.requires_grad]
        self.config = config
        self.step_count = 0

    @property
    def learning_rate(self) -> float:
        return self.config.learning_rate

    def zero_grad(self) -> None:
        for p in self.params:
            p.zero_grad()

    def step(self) -> None:
        """Apply one update, then zero every gradient.

        Raises:
            UsageError: No backward pass has populated any gradient
        """
        if self.params and not any(p.grad_populated for p in self.params):
            raise UsageError("optimizer step before any backward pass")
        self.step_count += 1
        for index, p in enumerate(self.params):
            assert p.grad is not None
            if np.any(p.grad):
                self._update(index, p, p.grad)
        self.zero_grad()

    @abstractmethod
    def _update(self, index: int, param: Parameter, grad: NDArray[Any]) -> None:
        ...


class SGD(Optimizer):
    """p <- p - lr * g."""

    def _update(self, index: int, param: Parameter, grad: NDArray[Any]) -> None:
        param.data -= param.dtype.type(self.learning_rate) * grad


class Adam(Optimizer):
    """Bias-corrected Adam with per-parameter moments."""

    def __init__(self, params: Sequence[Parameter], config: OptimizerConfig) -> None:
        super().__init__(params, config)
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]

    def _update(self, index: int, param: Parameter, grad: NDArray[Any]) -> None:
        c = self.config
        t = self.step_count
        m = self.m[index]
        v = self.v[index]
        m *= c.beta1
        m += (1 - c.beta1) * grad
        v *= c.beta2
        v += (1 - c.beta2) * grad * grad
        m_hat = m / (1 - c.beta1**t)
        v_hat = v / (1 - c.beta2**t)
        update = self.learning_rate * m_hat / (np.sqrt(v_hat) + c.eps)
        param.data -= update.astype(param.dtype)


class OptimizerFactory:
    """Registry mapping optimizer kinds to classes."""

    _optimizers: ClassVar[dict[str, type[Optimizer]]] = {}

    @classmethod
    def register(cls, kind: str, optimizer_class: type[Optimizer]) -> None:
        cls._optimizers[kind.lower()] = optimizer_class

    @classmethod
    def create(cls, config: OptimizerConfig, params: Sequence[Parameter]) -> Optimizer:
        """Instantiate the optimizer named by ``config.kind``.

        Raises:
            ConfigError: If the kind is not registered
        """
        kind = config.kind.value if isinstance(config.kind, OptimizerKind) else str(config.kind)
        if kind not in cls._optimizers:
            available = ", ".join(cls._optimizers) or "none"
            raise ConfigError(f"Unknown optimizer: {kind}. Available optimizers: {available}")
        return cls._optimizers[kind](params, config)

    @classmethod
    def available(cls) -> list[str]:
        return list(cls._optimizers)


OptimizerFactory.register(OptimizerKind.SGD.value, SGD)
OptimizerFactory.register(OptimizerKind.ADAM.value, Adam)


def optimizer_step(optimizer: Optimizer) -> None:
    """Update the optimizer's parameters and zero their gradients."""
    optimizer.step()
