"""MSTN raw multispectral tensor files.

Layout (little-endian): magic ``MSTN``, u32 version, u32 count, u32 H,
u32 W, u32 J, u32 dtype code (0 = float32), then count*H*W*J float32
values row-major.
"""

import struct
from pathlib import Path
from typing import Any

import numpy as np
import structlog
from numpy.typing import NDArray

from spckd.errors import FormatError, ShapeError

logger = structlog.get_logger(__name__)

MAGIC = b"MSTN"
VERSION = 1
DTYPE_F32 = 0
_HEADER = struct.Struct("<4sIIIIII")


def mstn_bytes(images: NDArray[Any]) -> bytes:
    if images.ndim != 4:
        raise ShapeError(f"MSTN tensors must be (count, H, W, J), got {images.shape}")
    count, h, w, j = images.shape
    header = _HEADER.pack(MAGIC, VERSION, count, h, w, j, DTYPE_F32)
    return header + np.ascontiguousarray(images, dtype="<f4").tobytes()


def parse_mstn(raw: bytes) -> NDArray[np.float32]:
    if len(raw) < _HEADER.size:
        raise FormatError("MSTN header truncated", offset=len(raw))
    magic, version, count, h, w, j, dtype = _HEADER.unpack_from(raw, 0)
    if magic != MAGIC:
        raise FormatError(f"Bad MSTN magic {magic!r}", offset=0)
    if version != VERSION:
        raise FormatError(f"Unsupported MSTN version {version}", offset=4)
    if dtype != DTYPE_F32:
        raise FormatError(f"Unsupported MSTN dtype code {dtype}", offset=24)
    expected = count * h * w * j * 4
    available = len(raw) - _HEADER.size
    if available != expected:
        raise FormatError(
            f"MSTN payload has {available} bytes, header declares {expected}",
            offset=_HEADER.size + min(available, expected),
        )
    values = np.frombuffer(raw, dtype="<f4", count=count * h * w * j, offset=_HEADER.size)
    return values.astype(np.float32).reshape(count, h, w, j)


def write_mstn(images: NDArray[Any], path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(mstn_bytes(images))
    logger.debug("mstn_written", path=str(path), shape=images.shape)


def read_mstn(path: Path) -> NDArray[np.float32]:
    images = parse_mstn(path.read_bytes())
    logger.debug("mstn_loaded", path=str(path), shape=images.shape)
    return images
