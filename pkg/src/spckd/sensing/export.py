"""SPCA files: realized coded apertures for inspection.

Layout (little-endian): magic ``SPCA``, u32 version, u32 K, u32 M, u32 N,
u8 mode (0 binary, 1 real), then K*M*N float32 values row-major.
"""

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np
import structlog
from numpy.typing import NDArray

from spckd.errors import FormatError
from spckd.models.config import ApertureMode
from spckd.sensing.aperture import CodedApertureBank

logger = structlog.get_logger(__name__)

MAGIC = b"SPCA"
VERSION = 1
_HEADER = struct.Struct("<4sIIIIB")
_MODE_CODES = {ApertureMode.BINARY: 0, ApertureMode.REAL: 1}


@dataclass
class ApertureExport:
    """Contents of an SPCA file."""

    matrix: NDArray[np.float32]  # K x (M*N)
    mode: ApertureMode
    height: int
    width: int


def save_aperture(bank: CodedApertureBank, path: Path) -> None:
    """Write the realized apertures of ``bank``."""
    s = bank.shape
    matrix = bank.realized_matrix().astype("<f4")
    header = _HEADER.pack(MAGIC, VERSION, s.snapshots, s.height, s.width, _MODE_CODES[bank.mode])
    path.write_bytes(header + matrix.tobytes(order="C"))
    logger.info("aperture_saved", path=str(path), snapshots=s.snapshots, mode=bank.mode.value)


def load_aperture(path: Path) -> ApertureExport:
    """Read an SPCA file.

    Raises:
        FormatError: Wrong magic, unsupported version or mode, or truncated payload
    """
    raw = path.read_bytes()
    if len(raw) < _HEADER.size:
        raise FormatError("SPCA header truncated", offset=len(raw))
    magic, version, snapshots, height, width, mode_code = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise FormatError(f"Bad SPCA magic {magic!r}", offset=0)
    if version != VERSION:
        raise FormatError(f"Unsupported SPCA version {version}", offset=4)
    modes = {code: mode for mode, code in _MODE_CODES.items()}
    if mode_code not in modes:
        raise FormatError(f"Unknown SPCA mode {mode_code}", offset=_HEADER.size - 1)
    count = snapshots * height * width
    expected = _HEADER.size + 4 * count
    if len(raw) != expected:
        raise FormatError(
            f"SPCA payload has {len(raw)} bytes, expected {expected}", offset=len(raw)
        )
    values: NDArray[Any] = np.frombuffer(raw, dtype="<f4", count=count, offset=_HEADER.size)
    matrix = values.astype(np.float32).reshape(snapshots, height * width)
    return ApertureExport(matrix, modes[mode_code], height, width)
