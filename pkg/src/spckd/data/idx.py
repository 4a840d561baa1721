"""IDX (MNIST-family) file parser."""

import gzip
from pathlib import Path
from typing import Any

import numpy as np
import structlog
from numpy.typing import NDArray

from spckd.errors import FormatError

logger = structlog.get_logger(__name__)

UNSIGNED_BYTE = 0x08


def parse_idx(raw: bytes) -> NDArray[np.float64]:
    """Decode IDX bytes of unsigned-byte type into values in [0, 1].

    Raises:
        FormatError: Bad magic, unsupported type, truncated dimensions or
            payload, or trailing bytes (offset names where parsing stopped)
    """
    if len(raw) < 4:
        raise FormatError("IDX header truncated", offset=len(raw))
    if raw[0] != 0 or raw[1] != 0:
        raise FormatError(f"Bad IDX magic {raw[:2].hex()}", offset=0)
    if raw[2] != UNSIGNED_BYTE:
        raise FormatError(f"Unsupported IDX type 0x{raw[2]:02x}", offset=2)
    ndim = raw[3]
    payload_at = 4 + 4 * ndim
    if len(raw) < payload_at:
        raise FormatError(f"IDX dimensions truncated ({ndim} declared)", offset=len(raw))
    dims = tuple(int(d) for d in np.frombuffer(raw, dtype=">u4", count=ndim, offset=4))
    count = int(np.prod(dims, dtype=np.int64)) if dims else 1
    available = len(raw) - payload_at
    if available < count:
        raise FormatError(
            f"IDX payload has {available} bytes, dims {dims} need {count}", offset=len(raw)
        )
    if available > count:
        raise FormatError(
            f"{available - count} trailing bytes after IDX payload", offset=payload_at + count
        )
    values = np.frombuffer(raw, dtype=np.uint8, count=count, offset=payload_at)
    return values.reshape(dims).astype(np.float64) / 255.0


def read_idx(path: Path) -> NDArray[Any]:
    """Read an IDX file, gunzipping ``*.gz`` transparently."""
    raw = gzip.decompress(path.read_bytes()) if path.suffix == ".gz" else path.read_bytes()
    values = parse_idx(raw)
    logger.debug("idx_loaded", path=str(path), shape=values.shape)
    return values


def idx_bytes(values: NDArray[np.uint8]) -> bytes:
    """Encode unsigned bytes as IDX (used for fixtures and exports)."""
    header = bytes([0, 0, UNSIGNED_BYTE, values.ndim])
    dims = np.asarray(values.shape, dtype=">u4").tobytes()
    return header + dims + np.ascontiguousarray(values, dtype=np.uint8).tobytes()
