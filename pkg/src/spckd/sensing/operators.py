"""Forward, adjoint and re-projection operators of the SPC.

Scenes are flattened band-major: band ``j`` occupies entries
``[j*M*N, (j+1)*M*N)``. Measurements are laid out the same way with K
entries per band. A leading batch axis is optional everywhere.
"""

from typing import Any

import numpy as np
from numpy.typing import NDArray

from spckd.errors import ShapeError
from spckd.models.config import NoiseKind, NoiseSpec
from spckd.numerics import ops
from spckd.numerics.tensor import Tensor
from spckd.sensing.aperture import CodedApertureBank


def _as_batch(t: Tensor, length: int, what: str) -> tuple[Tensor, bool]:
    if t.data.ndim == 1:
        t, unbatched = ops.reshape(t, (1, t.shape[0])), True
    elif t.data.ndim == 2:
        unbatched = False
    else:
        raise ShapeError(f"{what} must be 1-D or batched 2-D, got shape {t.shape}")
    if t.shape[1] != length:
        raise ShapeError(f"{what} has length {t.shape[1]}, expected {length}")
    return t, unbatched


def _restore(t: Tensor, unbatched: bool) -> Tensor:
    return ops.reshape(t, (t.shape[1],)) if unbatched else t


def awgn(clean: NDArray[Any], snr_db: float, rng: np.random.Generator) -> NDArray[Any]:
    """Gaussian noise realizing ``snr_db`` per measurement vector (rows of ``clean``)."""
    power = np.sum(clean.astype(np.float64) ** 2, axis=-1, keepdims=True) / clean.shape[-1]
    sigma = np.sqrt(power / 10.0 ** (snr_db / 10.0))
    return (rng.standard_normal(clean.shape) * sigma).astype(clean.dtype)


def spc_forward(
    bank: CodedApertureBank,
    x: Tensor,
    noise: NoiseSpec | None = None,
    rng: np.random.Generator | None = None,
    matrix: Tensor | None = None,
) -> Tensor:
    """y_j = H x_j + w_j for every band j with one shared realized H.

    Args:
        bank: Aperture bank providing H
        x: Scene(s) of length M*N*J
        noise: Noise model; ``None`` or kind NONE gives the clean projection
        rng: Noise generator; defaults to one seeded from ``noise.seed``
        matrix: Pre-realized H to reuse within one forward pass
    """
    shape = bank.shape
    h = bank.realize() if matrix is None else matrix
    xb, unbatched = _as_batch(x, shape.signal_size, "scene")
    batch = xb.shape[0]
    bands = ops.reshape(xb, (batch, shape.bands, shape.pixels))
    y = ops.matmul(bands, ops.transpose(h))
    y = ops.reshape(y, (batch, shape.measurement_size))
    if noise is not None and noise.kind == NoiseKind.AWGN:
        assert noise.snr_db is not None
        if rng is None:
            rng = np.random.default_rng(noise.seed if noise.seed is not None else 0)
        clean = y.data.reshape(batch, shape.bands, shape.snapshots)
        w = awgn(clean, noise.snr_db, rng).reshape(y.shape)
        y = ops.add_const(y, w)
    return _restore(y, unbatched)


def spc_adjoint(bank: CodedApertureBank, y: Tensor, matrix: Tensor | None = None) -> Tensor:
    """Hᵀ y_j for every band (no scaling)."""
    shape = bank.shape
    h = bank.realize() if matrix is None else matrix
    yb, unbatched = _as_batch(y, shape.measurement_size, "measurements")
    batch = yb.shape[0]
    bands = ops.reshape(yb, (batch, shape.bands, shape.snapshots))
    x = ops.matmul(bands, h)
    return _restore(ops.reshape(x, (batch, shape.signal_size)), unbatched)


def reproject(bank: CodedApertureBank, y: Tensor, matrix: Tensor | None = None) -> Tensor:
    """Initial estimate x⁰ = (1/K) Hᵀ y."""
    return ops.mul_const(spc_adjoint(bank, y, matrix), 1.0 / bank.shape.snapshots)
