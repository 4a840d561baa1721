"""Image preprocessing: resize, band selection and patch tiling."""

from typing import Any

import numpy as np
from numpy.typing import NDArray
from scipy import ndimage

from spckd.errors import ConfigError, ShapeError

SPECTRAL_SOURCE_SIZE = 200
SPECTRAL_PATCH_SIZE = 100


def _as_cube(img: NDArray[Any]) -> NDArray[Any]:
    if img.ndim == 2:
        return img[:, :, None]
    if img.ndim != 3:
        raise ShapeError(f"Expected an (H, W) or (H, W, J) image, got {img.shape}")
    return img


def resize_bilinear(img: NDArray[Any], height: int, width: int) -> NDArray[Any]:
    """Per-band bilinear resize with corner-aligned sampling."""
    if height < 1 or width < 1:
        raise ConfigError(f"Resize target must be positive, got {height}x{width}")
    cube = _as_cube(img)
    h, w, _ = cube.shape
    if (h, w) == (height, width):
        return cube.copy()
    bands = [
        ndimage.zoom(
            cube[:, :, j].astype(np.float64),
            (height / h, width / w),
            output=np.float64,
            order=1,
            mode="nearest",
            grid_mode=False,
        )
        for j in range(cube.shape[2])
    ]
    out = np.stack(bands, axis=-1)
    if out.shape[:2] != (height, width):
        raise ShapeError(f"Resize produced {out.shape[:2]}, expected {(height, width)}")
    return out.astype(cube.dtype) if np.issubdtype(cube.dtype, np.floating) else out


def select_bands(img: NDArray[Any], bands: int) -> NDArray[Any]:
    """Nearest-index spectral subsampling to ``bands`` channels."""
    cube = _as_cube(img)
    available = cube.shape[2]
    if bands < 1 or bands > available:
        raise ConfigError(f"Cannot select {bands} bands from {available}")
    if bands == available:
        return cube
    indices = np.round(np.linspace(0, available - 1, bands)).astype(int)
    return cube[:, :, indices]


def extract_patches(img: NDArray[Any], size: int) -> list[NDArray[Any]]:
    """Non-overlapping ``size``×``size`` tiles, row-major from the top-left.

    Partial edge tiles are discarded.
    """
    cube = _as_cube(img)
    h, w, _ = cube.shape
    if size < 1 or size > h or size > w:
        raise ConfigError(f"Patch size {size} does not fit a {h}x{w} image")
    return [
        cube[r : r + size, c : c + size, :]
        for r in range(0, h - size + 1, size)
        for c in range(0, w - size + 1, size)
    ]


def prepare_spectral(img: NDArray[Any], bands: int) -> list[NDArray[Any]]:
    """Resize to 200×200, keep ``bands`` bands and tile four 100×100 patches."""
    resized = resize_bilinear(img, SPECTRAL_SOURCE_SIZE, SPECTRAL_SOURCE_SIZE)
    return extract_patches(select_bands(resized, bands), SPECTRAL_PATCH_SIZE)
