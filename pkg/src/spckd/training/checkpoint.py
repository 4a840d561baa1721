"""SPKD checkpoint files.

Layout (little-endian): magic ``SPKD``, u32 version, u32 header length,
UTF-8 JSON header (config echo, epoch, tensor manifest with names, shapes
and byte offsets), float32 payloads in manifest order, u32 trailer length,
UTF-8 JSON trailer with the metric history.
"""

import hashlib
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import structlog
from numpy.typing import NDArray
from pydantic import ValidationError

from spckd.errors import FormatError
from spckd.models.checkpoint import CheckpointHeader, TensorEntry
from spckd.models.config import ExperimentConfig
from spckd.recovery.network import RecoveryNet
from spckd.sensing.aperture import CodedApertureBank
from spckd.training.system import build_system

logger = structlog.get_logger(__name__)

MAGIC = b"SPKD"
VERSION = 1
_U32 = struct.Struct("<I")


@dataclass
class Checkpoint:
    """All parameters of a trained system plus its configuration and history."""

    config: ExperimentConfig
    tensors: dict[str, NDArray[np.float32]]
    epoch: int = 0
    history: dict[str, Any] = field(default_factory=dict)

    @classmethod
    def from_system(
        cls,
        config: ExperimentConfig,
        net: RecoveryNet,
        bank: CodedApertureBank,
        epoch: int = 0,
        history: dict[str, Any] | None = None,
    ) -> "Checkpoint":
        tensors = {name: p.data.astype(np.float32) for name, p in net.named_parameters()}
        tensors[_latent_name(bank)] = bank.latent.data.astype(np.float32)
        return cls(config, tensors, epoch, dict(history or {}))

    def build_system(self) -> tuple[RecoveryNet, CodedApertureBank]:
        """Rebuild the network and bank and load the stored parameters."""
        net, bank = build_system(self.config)
        self.load_into(net, bank)
        return net, bank

    def load_into(self, net: RecoveryNet, bank: CodedApertureBank) -> None:
        params = dict(net.named_parameters())
        params[_latent_name(bank)] = bank.latent
        missing = set(params) - set(self.tensors)
        if missing:
            raise FormatError(f"Checkpoint lacks tensors: {sorted(missing)}")
        for name, param in params.items():
            value = self.tensors[name]
            if value.shape != param.shape:
                raise FormatError(
                    f"Stored shape {value.shape} does not match expected {param.shape}", name=name
                )
            param.assign(value)


def _latent_name(bank: CodedApertureBank) -> str:
    return bank.latent.name or "aperture.latent"


def checkpoint_bytes(ckpt: Checkpoint) -> bytes:
    """Serialize ``ckpt`` to the SPKD byte layout."""
    manifest: list[TensorEntry] = []
    payloads = []
    offset = 0
    for name, value in ckpt.tensors.items():
        data = np.ascontiguousarray(value, dtype="<f4").tobytes()
        manifest.append(TensorEntry(name=name, shape=list(value.shape), offset=offset))
        payloads.append(data)
        offset += len(data)
    header = CheckpointHeader(
        config=ckpt.config, epoch=ckpt.epoch, tensors=manifest, payload_bytes=offset
    )
    header_raw = json.dumps(header.model_dump(mode="json"), sort_keys=True).encode("utf-8")
    trailer = json.dumps(ckpt.history, sort_keys=True).encode("utf-8")
    return b"".join(
        [
            MAGIC,
            _U32.pack(VERSION),
            _U32.pack(len(header_raw)),
            header_raw,
            *payloads,
            _U32.pack(len(trailer)),
            trailer,
        ]
    )


def checkpoint_save(ckpt: Checkpoint, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(checkpoint_bytes(ckpt))
    logger.info("checkpoint_saved", path=str(path), epoch=ckpt.epoch, tensors=len(ckpt.tensors))


def checkpoint_digest(path: Path) -> str:
    """SHA-256 of a checkpoint file."""
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _read_u32(raw: bytes, offset: int, what: str) -> int:
    if offset + 4 > len(raw):
        raise FormatError(f"Checkpoint truncated while reading {what}", offset=offset)
    return int(_U32.unpack_from(raw, offset)[0])


def _read_json(raw: bytes, offset: int, length: int, what: str) -> Any:
    if offset + length > len(raw):
        raise FormatError(f"Checkpoint truncated inside {what}", offset=offset)
    try:
        return json.loads(raw[offset : offset + length].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"Corrupt {what}: {exc}", offset=offset) from exc


def _offending_tensor(header: Any, exc: ValidationError) -> str | None:
    """Name (or manifest index) of the first tensor entry the error points at."""
    for error in exc.errors():
        loc = error["loc"]
        if len(loc) >= 2 and loc[0] == "tensors" and isinstance(loc[1], int):
            entry = header["tensors"][loc[1]]
            name = entry.get("name") if isinstance(entry, dict) else None
            return name if isinstance(name, str) and name else f"#{loc[1]}"
    return None


def _parse_header(header: Any) -> CheckpointHeader:
    try:
        return CheckpointHeader.model_validate(header)
    except ValidationError as exc:
        name = _offending_tensor(header, exc)
        raise FormatError(f"Invalid checkpoint header: {exc}", offset=12, name=name) from exc


def parse_checkpoint(raw: bytes) -> Checkpoint:
    """Parse SPKD bytes; nothing is returned unless the whole file is valid.

    Raises:
        FormatError: Wrong magic, version mismatch, truncation, corrupt JSON,
            malformed manifest entries or tensor shapes that disagree with
            the embedded configuration
    """
    if raw[:4] != MAGIC:
        raise FormatError(f"Bad checkpoint magic {raw[:4]!r}", offset=0)
    version = _read_u32(raw, 4, "version")
    if version != VERSION:
        raise FormatError(f"Unsupported checkpoint version {version}", offset=4)
    header_len = _read_u32(raw, 8, "header length")
    header = _parse_header(_read_json(raw, 12, header_len, "header"))

    base = 12 + header_len
    if base + header.payload_bytes > len(raw):
        raise FormatError("Checkpoint payload truncated", offset=len(raw))
    tensors: dict[str, NDArray[np.float32]] = {}
    for entry in header.tensors:
        shape = tuple(entry.shape)
        count = int(np.prod(shape)) if shape else 1
        start = base + entry.offset
        if start + 4 * count > base + header.payload_bytes:
            raise FormatError(
                "Tensor payload exceeds declared payload", offset=start, name=entry.name
            )
        values = np.frombuffer(raw, dtype="<f4", count=count, offset=start)
        tensors[entry.name] = values.astype(np.float32).reshape(shape)

    trailer_at = base + header.payload_bytes
    trailer_len = _read_u32(raw, trailer_at, "trailer length")
    history = _read_json(raw, trailer_at + 4, trailer_len, "trailer")
    end = trailer_at + 4 + trailer_len
    if end != len(raw):
        raise FormatError("Trailing bytes after checkpoint trailer", offset=end)

    ckpt = Checkpoint(header.config, tensors, header.epoch, history)
    net, bank = build_system(header.config)
    expected = {name: p.shape for name, p in net.named_parameters()}
    expected[_latent_name(bank)] = bank.latent.shape
    for name, shape in expected.items():
        if name not in tensors:
            raise FormatError("Tensor missing from checkpoint", name=name)
        if tensors[name].shape != shape:
            raise FormatError(
                f"Declared shape {tensors[name].shape} does not match expected {shape}", name=name
            )
    return ckpt


def checkpoint_load(path: Path) -> Checkpoint:
    ckpt = parse_checkpoint(path.read_bytes())
    logger.info("checkpoint_loaded", path=str(path), epoch=ckpt.epoch)
    return ckpt
