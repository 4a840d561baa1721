"""Image quality metrics."""

import math
from typing import Any

import numpy as np
from numpy.typing import ArrayLike, NDArray
from skimage.metrics import structural_similarity

from spckd.errors import ConfigError, ShapeError
from spckd.numerics.tensor import Tensor

PSNR_CAP_DB = 100.0
SSIM_WINDOW = 11
SSIM_SIGMA = 1.5


def _array(value: Tensor | ArrayLike) -> NDArray[np.float64]:
    data = value.data if isinstance(value, Tensor) else value
    return np.asarray(data, dtype=np.float64)


def psnr(a: Tensor | ArrayLike, b: Tensor | ArrayLike, peak: float = 1.0) -> float:
    """10·log10(peak² / MSE) in dB, capped at 100 dB."""
    x, y = _array(a), _array(b)
    if x.shape != y.shape:
        raise ShapeError(f"PSNR needs equal shapes, got {x.shape} and {y.shape}")
    mse = float(np.mean((x - y) ** 2))
    if mse == 0.0:
        return PSNR_CAP_DB
    return min(PSNR_CAP_DB, 10.0 * math.log10(peak**2 / mse))


def ssim(a: Tensor | ArrayLike, b: Tensor | ArrayLike, data_range: float = 1.0) -> float:
    """Gaussian-window SSIM of (M, N) or (M, N, J) images, averaged over bands.

    Raises:
        ShapeError: Shapes differ or are not 2-D/3-D
        ConfigError: Image smaller than the 11×11 window
    """
    x, y = _array(a), _array(b)
    if x.shape != y.shape:
        raise ShapeError(f"SSIM needs equal shapes, got {x.shape} and {y.shape}")
    if x.ndim == 2:
        x, y = x[:, :, None], y[:, :, None]
    if x.ndim != 3:
        raise ShapeError(f"SSIM expects (M, N) or (M, N, J) images, got {x.shape}")
    if min(x.shape[:2]) < SSIM_WINDOW:
        raise ConfigError(
            f"Image {x.shape[:2]} is smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} window"
        )
    values = [_ssim_band(x[:, :, j], y[:, :, j], data_range) for j in range(x.shape[2])]
    return float(np.mean(values))


def _ssim_band(x: NDArray[Any], y: NDArray[Any], data_range: float) -> float:
    return float(
        structural_similarity(
            x,
            y,
            data_range=data_range,
            gaussian_weights=True,
            sigma=SSIM_SIGMA,
            use_sample_covariance=False,
            K1=0.01,
            K2=0.03,
        )
    )
