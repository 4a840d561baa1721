"""Central-difference gradient oracle."""

from collections.abc import Callable, Sequence
from dataclasses import dataclass
from typing import Any

import numpy as np
import structlog
from numpy.typing import NDArray

from spckd.errors import ConfigError
from spckd.numerics.tensor import Parameter, Tape, Tensor, no_grad

logger = structlog.get_logger(__name__)


@dataclass
class GradCheckReport:
    """Outcome of a finite-difference comparison."""

    max_rel_error: float
    checked: int
    kinks: int
    worst_parameter: str | None = None

    def passed(self, tolerance: float = 1e-4) -> bool:
        return self.max_rel_error <= tolerance


def analytic_gradients(
    forward_fn: Callable[[], Tensor], params: Sequence[Parameter]
) -> list[NDArray[Any]]:
    """Run one recorded forward/backward pass and copy out the gradients."""
    for p in params:
        p.zero_grad()
    with Tape() as tape:
        loss = forward_fn()
    tape.backward(loss)
    grads = [np.array(p.grad, copy=True) for p in params]
    for p in params:
        p.zero_grad()
    return grads


def finite_diff_report(
    forward_fn: Callable[[], Tensor],
    params: Sequence[Parameter],
    eps: float = 1e-5,
    floor: float = 1e-8,
    kink_tolerance: float = 1e-5,
    max_entries: int | None = None,
    analytic: Sequence[NDArray[Any]] | None = None,
    seed: int = 0,
) -> GradCheckReport:
    """Compare analytic gradients with central differences entry by entry.

    The relative error of an entry is ``|a - n| / max(|a|, |n|, floor)``.
    Entries whose central difference at ``eps`` and ``eps / 2`` disagree by
    more than ``kink_tolerance`` (relative) have a ReLU or shrinkage kink
    inside the stencil; they are counted in ``kinks`` and not scored.

    Args:
        forward_fn: Deterministic closure returning a scalar loss
        params: Parameters to perturb (must be float64)
        eps: Finite-difference step
        floor: Lower bound of the error denominator
        kink_tolerance: Relative disagreement that marks a kink
        max_entries: Check at most this many entries per parameter
        analytic: Precomputed gradients to test instead of a fresh backward pass
        seed: Seed for entry sampling when ``max_entries`` is set
    """
    for p in params:
        if p.dtype != np.float64:
            raise ConfigError(f"Gradient checks need float64 parameters, {p.name!r} is {p.dtype}")
    grads = list(analytic) if analytic is not None else analytic_gradients(forward_fn, params)
    rng = np.random.default_rng(seed)

    def evaluate() -> float:
        with no_grad():
            return forward_fn().item()

    worst = 0.0
    worst_name: str | None = None
    checked = 0
    kinks = 0
    for p, grad in zip(params, grads, strict=True):
        flat = np.arange(p.size)
        if max_entries is not None and p.size > max_entries:
            flat = np.sort(rng.choice(p.size, size=max_entries, replace=False))
        for index in flat:
            idx = np.unravel_index(int(index), p.shape)
            original = p.data[idx]
            estimates = []
            for step in (eps, eps / 2):
                p.data[idx] = original + step
                f_plus = evaluate()
                p.data[idx] = original - step
                f_minus = evaluate()
                estimates.append((f_plus - f_minus) / (2 * step))
            p.data[idx] = original

            numeric, half_step = estimates
            if abs(numeric - half_step) > kink_tolerance * max(abs(numeric), abs(half_step), floor):
                kinks += 1
                continue
            value = float(grad[idx])
            error = abs(value - numeric) / max(abs(value), abs(numeric), floor)
            checked += 1
            if error > worst:
                worst = error
                worst_name = p.name

    logger.debug(
        "gradcheck_completed",
        max_rel_error=worst,
        checked=checked,
        kinks=kinks,
        worst_parameter=worst_name,
    )
    return GradCheckReport(worst, checked, kinks, worst_name)


def finite_diff_check(
    forward_fn: Callable[[], Tensor],
    params: Sequence[Parameter],
    eps: float = 1e-5,
    **kwargs: Any,
) -> float:
    """Return the worst relative error between analytic and numeric gradients."""
    return finite_diff_report(forward_fn, params, eps=eps, **kwargs).max_rel_error
