"""Tensors, parameters and the compute tape for reverse-mode gradients."""

from collections.abc import Callable, Iterator
from contextlib import contextmanager
from contextvars import ContextVar
from dataclasses import dataclass
from typing import Any, Literal

import numpy as np
from numpy.typing import ArrayLike, NDArray

from spckd.errors import NumericalError, ShapeError, UsageError

DType = Literal["f32", "f64"]

_NUMPY_DTYPES: dict[str, type[np.floating[Any]]] = {"f32": np.float32, "f64": np.float64}

_active_tape: ContextVar["Tape | None"] = ContextVar("spckd_active_tape", default=None)


def resolve_dtype(dtype: DType) -> np.dtype[Any]:
    """Map a dtype name to its numpy dtype."""
    try:
        return np.dtype(_NUMPY_DTYPES[dtype])
    except KeyError:
        raise ShapeError(f"Unknown dtype: {dtype}. Must be one of {set(_NUMPY_DTYPES)}") from None


class Tensor:
    """Dense real array that can take part in a recorded computation.

    ``data`` is always a float32 or float64 numpy array. ``grad`` is filled
    during :meth:`Tape.backward` for tensors that require gradients.
    """

    __slots__ = ("data", "grad", "requires_grad", "name")

    def __init__(
        self,
        data: ArrayLike,
        requires_grad: bool = False,
        name: str | None = None,
        dtype: DType | None = None,
    ) -> None:
        array = np.asarray(data)
        if dtype is not None:
            array = array.astype(resolve_dtype(dtype), copy=False)
        elif array.dtype not in (np.float32, np.float64):
            array = array.astype(np.float32)
        self.data: NDArray[Any] = array
        self.grad: NDArray[Any] | None = None
        self.requires_grad = requires_grad
        self.name = name

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(self.data.shape)

    @property
    def dtype(self) -> np.dtype[Any]:
        return self.data.dtype

    @property
    def size(self) -> int:
        return int(self.data.size)

    def item(self) -> float:
        """Return the value of a single-element tensor."""
        if self.data.size != 1:
            raise ShapeError(f"item() needs a single element, got shape {self.shape}")
        return float(self.data.reshape(()))

    def detach(self) -> "Tensor":
        """Return a constant view of this tensor (gradients stop here)."""
        return Tensor(self.data)

    def accumulate(self, grad: NDArray[Any]) -> None:
        """Add an upstream gradient contribution."""
        if not self.requires_grad:
            return
        if grad.shape != self.data.shape:
            raise ShapeError(
                f"Gradient shape {grad.shape} does not match tensor shape {self.data.shape}"
            )
        if self.grad is None:
            self.grad = np.array(grad, dtype=self.data.dtype, copy=True)
        else:
            self.grad += grad

    # Operator sugar; the implementations live in spckd.numerics.ops.

    def __add__(self, other: "Tensor") -> "Tensor":
        from spckd.numerics import ops

        return ops.add(self, other)

    def __sub__(self, other: "Tensor") -> "Tensor":
        from spckd.numerics import ops

        return ops.sub(self, other)

    def __mul__(self, other: "Tensor | float") -> "Tensor":
        from spckd.numerics import ops

        if isinstance(other, Tensor):
            return ops.scale(self, other) if other.data.ndim == 0 else ops.mul(self, other)
        return ops.mul_const(self, float(other))

    def __rmul__(self, other: float) -> "Tensor":
        return self.__mul__(other)

    def __neg__(self) -> "Tensor":
        from spckd.numerics import ops

        return ops.mul_const(self, -1.0)

    def __matmul__(self, other: "Tensor") -> "Tensor":
        from spckd.numerics import ops

        return ops.matmul(self, other)

    def __repr__(self) -> str:
        label = f", name={self.name!r}" if self.name else ""
        return f"{self.__class__.__name__}(shape={self.shape}, dtype={self.dtype}{label})"


class Parameter(Tensor):
    """Learnable leaf tensor owned by a model.

    The gradient buffer always exists and has the value's shape; it is
    zero until a backward pass reaches the parameter.
    """

    __slots__ = ("grad_populated",)

    def __init__(
        self,
        data: ArrayLike,
        name: str | None = None,
        requires_grad: bool = True,
        dtype: DType | None = None,
    ) -> None:
        super().__init__(
            np.array(data, copy=True), requires_grad=requires_grad, name=name, dtype=dtype
        )
        self.grad = np.zeros_like(self.data)
        self.grad_populated = False

    def zero_grad(self) -> None:
        """Reset the gradient buffer to zeros."""
        self.grad = np.zeros_like(self.data)
        self.grad_populated = False

    def accumulate(self, grad: NDArray[Any]) -> None:
        if not self.requires_grad:
            return
        super().accumulate(grad)
        self.grad_populated = True

    def assign(self, value: ArrayLike) -> None:
        """Overwrite the value in place, keeping dtype and shape."""
        array = np.asarray(value, dtype=self.data.dtype)
        if array.shape != self.data.shape:
            raise ShapeError(
                f"Cannot assign shape {array.shape} to parameter {self.name!r} "
                f"of shape {self.shape}"
            )
        self.data = np.array(array, copy=True)


@dataclass
class TapeEntry:
    """One recorded primitive and its backward closure."""

    op: str
    backward: Callable[[], None]


class Tape:
    """Ordered record of primitive operations.

    Operations executed inside ``with Tape() as tape:`` whose inputs require
    gradients are appended in execution order. :meth:`backward` replays the
    closures in exact reverse order, once.

    Example:
        with Tape() as tape:
            loss = ops.sum(ops.square(p))
        tape.backward(loss)
    """

    def __init__(self) -> None:
        self._entries: list[TapeEntry] = []
        self._consumed = False
        self._token: Any = None
        self.visited: list[str] = []

    def __enter__(self) -> "Tape":
        self._token = _active_tape.set(self)
        return self

    def __exit__(self, *exc_info: object) -> None:
        _active_tape.reset(self._token)
        self._token = None

    def __len__(self) -> int:
        return len(self._entries)

    @property
    def operations(self) -> list[str]:
        """Names of the recorded operations in recording order."""
        return [entry.op for entry in self._entries]

    def record(self, op: str, backward: Callable[[], None]) -> None:
        if self._consumed:
            raise UsageError("Cannot record onto a tape that was already replayed")
        self._entries.append(TapeEntry(op, backward))

    def backward(self, loss: Tensor) -> None:
        """Populate gradients of every parameter that produced ``loss``."""
        if self._consumed:
            raise UsageError("Tape was already consumed by a previous backward pass")
        if loss.data.size != 1:
            raise UsageError(f"backward needs a scalar loss, got shape {loss.shape}")
        self._consumed = True
        if not loss.requires_grad:
            return
        loss.grad = np.ones_like(loss.data)
        for entry in reversed(self._entries):
            self.visited.append(entry.op)
            entry.backward()
        self._entries = []


def current_tape() -> Tape | None:
    """Return the tape active in this context, if any."""
    return _active_tape.get()


@contextmanager
def no_grad() -> Iterator[None]:
    """Suspend recording inside a tape context."""
    token = _active_tape.set(None)
    try:
        yield
    finally:
        _active_tape.reset(token)


def check_finite(data: NDArray[Any], op: str) -> None:
    """Raise :class:`NumericalError` if ``data`` holds NaN or Inf."""
    if not np.all(np.isfinite(data)):
        raise NumericalError(f"Non-finite values produced by {op}")
