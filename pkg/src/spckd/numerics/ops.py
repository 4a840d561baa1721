"""Differentiable primitives used by the sensing, recovery and distillation code.

Every operation returns a new :class:`Tensor`. When a :class:`Tape` is
active and at least one input requires gradients, the operation records a
backward closure on it. Outputs are checked for NaN/Inf.
"""

from collections.abc import Sequence
from typing import Any

import numpy as np
from numpy.typing import NDArray

from spckd.errors import ShapeError
from spckd.numerics.tensor import Tape, Tensor, check_finite, current_tape

Axis = int | tuple[int, ...] | None


def _output(data: NDArray[Any], op: str, *inputs: Tensor) -> tuple[Tensor, Tape | None]:
    check_finite(data, op)
    tape = current_tape()
    if tape is None or not any(t.requires_grad for t in inputs):
        return Tensor(data), None
    return Tensor(data, requires_grad=True), tape


def _same_shape(a: Tensor, b: Tensor, op: str) -> None:
    if a.shape != b.shape:
        raise ShapeError(f"{op}: shape mismatch {a.shape} vs {b.shape}")


def _scalar(t: Tensor, op: str) -> NDArray[Any]:
    if t.data.size != 1:
        raise ShapeError(f"{op}: expected a scalar, got shape {t.shape}")
    return t.data.reshape(())


def add(a: Tensor, b: Tensor) -> Tensor:
    _same_shape(a, b, "add")
    out, tape = _output(a.data + b.data, "add", a, b)
    if tape is not None:

        def backward() -> None:
            if out.grad is not None:
                a.accumulate(out.grad)
                b.accumulate(out.grad)

        tape.record("add", backward)
    return out


def sub(a: Tensor, b: Tensor) -> Tensor:
    _same_shape(a, b, "sub")
    out, tape = _output(a.data - b.data, "sub", a, b)
    if tape is not None:

        def backward() -> None:
            if out.grad is not None:
                a.accumulate(out.grad)
                b.accumulate(-out.grad)

        tape.record("sub", backward)
    return out


def mul(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise product of equally shaped tensors."""
    _same_shape(a, b, "mul")
    out, tape = _output(a.data * b.data, "mul", a, b)
    if tape is not None:

        def backward() -> None:
            if out.grad is not None:
                a.accumulate(out.grad * b.data)
                b.accumulate(out.grad * a.data)

        tape.record("mul", backward)
    return out


def scale(t: Tensor, s: Tensor) -> Tensor:
    """Multiply every entry of ``t`` by the scalar tensor ``s``."""
    value = _scalar(s, "scale").astype(t.dtype)
    out, tape = _output(t.data * value, "scale", t, s)
    if tape is not None:

        def backward() -> None:
            if out.grad is not None:
                t.accumulate(out.grad * value)
                s.accumulate(np.asarray(np.sum(out.grad * t.data), dtype=s.dtype).reshape(s.shape))

        tape.record("scale", backward)
    return out


def mul_const(t: Tensor, c: float) -> Tensor:
    out, tape = _output(t.data * t.dtype.type(c), "mul_const", t)
    if tape is not None:

        def backward() -> None:
            if out.grad is not None:
                t.accumulate(out.grad * t.dtype.type(c))

        tape.record("mul_const", backward)
    return out


def add_const(t: Tensor, c: NDArray[Any]) -> Tensor:
    """Add a constant array (no gradient flows into ``c``)."""
    if c.shape != t.shape:
        raise ShapeError(f"add_const: shape mismatch {t.shape} vs {c.shape}")
    out, tape = _output(t.data + c.astype(t.dtype), "add_const", t)
    if tape is not None:

        def backward() -> None:
            if out.grad is not None:
                t.accumulate(out.grad)

        tape.record("add_const", backward)
    return out


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """``a @ b`` with ``a`` of shape (..., n, k) and a 2-D ``b`` of shape (k, m)."""
    if b.data.ndim != 2 or a.data.ndim < 2 or a.shape[-1] != b.shape[0]:
        raise ShapeError(f"matmul: incompatible shapes {a.shape} @ {b.shape}")
    out, tape = _output(a.data @ b.data, "matmul", a, b)
    if tape is not None:

        def backward() -> None:
            if out.grad is None:
                return
            g = out.grad
            if a.requires_grad:
                a.accumulate(g @ b.data.T)
            if b.requires_grad:
                rows = a.data.reshape(-1, a.shape[-1])
                b.accumulate(rows.T @ g.reshape(-1, g.shape[-1]))

        tape.record("matmul", backward)
    return out


def transpose(t: Tensor, axes: Sequence[int] | None = None) -> Tensor:
    order = tuple(reversed(range(t.data.ndim))) if axes is None else tuple(axes)
    out, tape = _output(np.transpose(t.data, order), "transpose", t)
    if tape is not None:
        inverse = tuple(int(i) for i in np.argsort(order))

        def backward() -> None:
            if out.grad is not None:
                t.accumulate(np.transpose(out.grad, inverse))

        tape.record("transpose", backward)
    return out


def reshape(t: Tensor, shape: Sequence[int]) -> Tensor:
    try:
        data = t.data.reshape(tuple(shape))
    except ValueError as exc:
        raise ShapeError(f"reshape: cannot view {t.shape} as {tuple(shape)}") from exc
    out, tape = _output(data, "reshape", t)
    if tape is not None:

        def backward() -> None:
            if out.grad is not None:
                t.accumulate(out.grad.reshape(t.shape))

        tape.record("reshape", backward)
    return out


def _normalize_axes(axis: Axis, ndim: int) -> tuple[int, ...]:
    if axis is None:
        return tuple(range(ndim))
    axes = (axis,) if isinstance(axis, int) else axis
    return tuple(sorted(a % ndim for a in axes))


def sum(t: Tensor, axis: Axis = None) -> Tensor:  # noqa: A001
    axes = _normalize_axes(axis, t.data.ndim)
    out, tape = _output(np.sum(t.data, axis=axes), "sum", t)
    if tape is not None:

        def backward() -> None:
            if out.grad is not None:
                g = np.expand_dims(out.grad, axes)
                t.accumulate(np.broadcast_to(g, t.shape))

        tape.record("sum", backward)
    return out


def mean(t: Tensor, axis: Axis = None) -> Tensor:
    axes = _normalize_axes(axis, t.data.ndim)
    count = int(np.prod([t.shape[a] for a in axes])) if axes else 1
    return mul_const(sum(t, axes), 1.0 / count)


def square(t: Tensor) -> Tensor:
    out, tape = _output(t.data * t.data, "square", t)
    if tape is not None:

        def backward() -> None:
            if out.grad is not None:
                t.accumulate(2 * t.data * out.grad)

        tape.record("square", backward)
    return out


def exp(t: Tensor) -> Tensor:
    out, tape = _output(np.exp(t.data), "exp", t)
    if tape is not None:

        def backward() -> None:
            if out.grad is not None:
                t.accumulate(out.grad * out.data)

        tape.record("exp", backward)
    return out


def sqrt(t: Tensor) -> Tensor:
    """Square root of a nonnegative tensor; subgradient 0 where the output is 0."""
    out, tape = _output(np.sqrt(np.maximum(t.data, 0)), "sqrt", t)
    if tape is not None:

        def backward() -> None:
            if out.grad is None:
                return
            positive = out.data > 0
            safe = np.where(positive, out.data, 1)
            t.accumulate(np.where(positive, out.grad / (2 * safe), 0).astype(t.dtype))

        tape.record("sqrt", backward)
    return out


def relu(t: Tensor) -> Tensor:
    mask = t.data > 0
    out, tape = _output(np.where(mask, t.data, np.zeros((), t.dtype)), "relu", t)
    if tape is not None:

        def backward() -> None:
            if out.grad is not None:
                t.accumulate(out.grad * mask)

        tape.record("relu", backward)
    return out


def soft_threshold(v: Tensor, beta: Tensor) -> Tensor:
    """``sign(v) * max(|v| - |beta|, 0)`` elementwise.

    The effective threshold is ``|beta|`` so ``beta`` itself is unconstrained.
    Subgradients at the kinks are 0.
    """
    b = _scalar(beta, "soft_threshold")
    tau = np.abs(b).astype(v.dtype)
    excess = np.abs(v.data) - tau
    active = excess > 0
    direction = np.sign(v.data)
    data = direction * np.where(active, excess, np.zeros((), v.dtype))
    out, tape = _output(data, "soft_threshold", v, beta)
    if tape is not None:

        def backward() -> None:
            if out.grad is None:
                return
            g = out.grad * active
            v.accumulate(g)
            if beta.requires_grad:
                d_tau = -np.sum(g * direction)
                d_beta = np.asarray(d_tau * np.sign(b), dtype=beta.dtype)
                beta.accumulate(d_beta.reshape(beta.shape))

        tape.record("soft_threshold", backward)
    return out


def sign_ste(t: Tensor) -> Tensor:
    """Sign with ``sign(0) = +1`` forward, identity backward (straight-through)."""
    one = np.ones((), t.dtype)
    out, tape = _output(np.where(t.data >= 0, one, -one), "sign_ste", t)
    if tape is not None:

        def backward() -> None:
            if out.grad is not None:
                t.accumulate(out.grad)

        tape.record("sign_ste", backward)
    return out


def stack(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    if not tensors:
        raise ShapeError("stack: need at least one tensor")
    first = tensors[0].shape
    for t in tensors[1:]:
        if t.shape != first:
            raise ShapeError(f"stack: shape mismatch {first} vs {t.shape}")
    out, tape = _output(np.stack([t.data for t in tensors], axis=axis), "stack", *tensors)
    if tape is not None:

        def backward() -> None:
            if out.grad is None:
                return
            for index, t in enumerate(tensors):
                t.accumulate(np.take(out.grad, index, axis=axis))

        tape.record("stack", backward)
    return out


def pairwise_sq_distances(features: Tensor) -> Tensor:
    """Squared Euclidean distances between the rows of ``features``.

    ``features`` has shape (..., L, D); the result has shape (..., L, L) and
    is symmetric with a zero diagonal.
    """
    f = features.data
    if f.ndim < 2:
        raise ShapeError(f"pairwise_sq_distances: need (..., L, D), got {features.shape}")
    rows = f.shape[-2]
    data = np.zeros(f.shape[:-2] + (rows, rows), dtype=f.dtype)
    for i in range(rows):
        for j in range(i + 1, rows):
            diff = f[..., i, :] - f[..., j, :]
            dist = np.sum(diff * diff, axis=-1)
            data[..., i, j] = dist
            data[..., j, i] = dist
    out, tape = _output(data, "pairwise_sq_distances", features)
    if tape is not None:

        def backward() -> None:
            if out.grad is None:
                return
            g = out.grad
            grad = np.zeros_like(f)
            for i in range(rows):
                for j in range(i + 1, rows):
                    weight = (g[..., i, j] + g[..., j, i])[..., None]
                    contribution = 2 * weight * (f[..., i, :] - f[..., j, :])
                    grad[..., i, :] += contribution
                    grad[..., j, :] -= contribution
            features.accumulate(grad)

        tape.record("pairwise_sq_distances", backward)
    return out


def conv2d_same(x: Tensor, kernel: Tensor, bias: Tensor) -> Tensor:
    """3×3 convolution with zero padding 1 (output keeps the spatial size).

    Args:
        x: Input of shape (H, W, Cin) or batched (B, H, W, Cin)
        kernel: Weights of shape (3, 3, Cin, Cout)
        bias: Bias of shape (Cout,)

    Returns:
        Output of shape (H, W, Cout) or (B, H, W, Cout)
    """
    k = kernel.data
    if k.ndim != 4 or k.shape[:2] != (3, 3):
        raise ShapeError(f"conv2d_same: kernel must be 3x3xCinxCout, got {kernel.shape}")
    unbatched = x.data.ndim == 3
    xd = x.data[None] if unbatched else x.data
    if xd.ndim != 4 or xd.shape[1] < 1 or xd.shape[2] < 1:
        raise ShapeError(f"conv2d_same: input must be HxWxC or BxHxWxC, got {x.shape}")
    batch, height, width, cin = xd.shape
    if k.shape[2] != cin:
        raise ShapeError(f"conv2d_same: input has {cin} channels, kernel expects {k.shape[2]}")
    cout = k.shape[3]
    if bias.shape != (cout,):
        raise ShapeError(f"conv2d_same: bias shape {bias.shape} != ({cout},)")

    padded = np.pad(xd, ((0, 0), (1, 1), (1, 1), (0, 0)))
    data = np.empty((batch, height, width, cout), dtype=np.result_type(xd, k))
    data[...] = bias.data
    for i in range(3):
        for j in range(3):
            data += padded[:, i : i + height, j : j + width, :] @ k[i, j]
    out, tape = _output(data[0] if unbatched else data, "conv2d_same", x, kernel, bias)
    if tape is not None:

        def backward() -> None:
            if out.grad is None:
                return
            g = out.grad[None] if unbatched else out.grad
            if kernel.requires_grad:
                dk = np.empty_like(k)
                for i in range(3):
                    for j in range(3):
                        window = padded[:, i : i + height, j : j + width, :]
                        dk[i, j] = np.tensordot(window, g, axes=([0, 1, 2], [0, 1, 2]))
                kernel.accumulate(dk)
            bias.accumulate(np.sum(g, axis=(0, 1, 2)).astype(bias.dtype))
            if x.requires_grad:
                dpad = np.zeros_like(padded)
                for i in range(3):
                    for j in range(3):
                        dpad[:, i : i + height, j : j + width, :] += g @ k[i, j].T
                dx = dpad[:, 1:-1, 1:-1, :]
                x.accumulate(dx[0] if unbatched else dx)

        tape.record("conv2d_same", backward)
    return out
