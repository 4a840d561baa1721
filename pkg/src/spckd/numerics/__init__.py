"""Dense tensors with a recorded reverse-mode gradient tape."""

from spckd.numerics import ops
from spckd.numerics.gradcheck import GradCheckReport, finite_diff_check, finite_diff_report
from spckd.numerics.ops import conv2d_same, soft_threshold
from spckd.numerics.tensor import (
    DType,
    Parameter,
    Tape,
    Tensor,
    current_tape,
    no_grad,
    resolve_dtype,
)


def backward(tape: Tape, loss: Tensor) -> None:
    """Populate the gradients of every parameter that contributed to ``loss``."""
    tape.backward(loss)


__all__ = [
    "DType",
    "GradCheckReport",
    "Parameter",
    "Tape",
    "Tensor",
    "backward",
    "conv2d_same",
    "current_tape",
    "finite_diff_check",
    "finite_diff_report",
    "no_grad",
    "ops",
    "resolve_dtype",
    "soft_threshold",
]
