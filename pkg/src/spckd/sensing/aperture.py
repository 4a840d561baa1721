"""Coded aperture banks for the single-pixel camera."""

import math
from dataclasses import dataclass
from typing import Any

import numpy as np
import structlog
from numpy.typing import NDArray
from scipy.linalg import hadamard

from spckd.errors import ConfigError
from spckd.models.config import ApertureInit, ApertureMode
from spckd.numerics import ops
from spckd.numerics.tensor import DType, Parameter, Tensor, no_grad

logger = structlog.get_logger(__name__)


@dataclass(frozen=True)
class SensingShape:
    """Geometry of one SPC system.

    ``snapshots`` (K) is ``round(gamma * M * N)`` with a minimum of 1.
    """

    height: int
    width: int
    bands: int
    snapshots: int
    gamma: float

    @property
    def pixels(self) -> int:
        return self.height * self.width

    @property
    def signal_size(self) -> int:
        """Length of a flattened scene, M*N*J."""
        return self.pixels * self.bands

    @property
    def measurement_size(self) -> int:
        """Length of a flattened measurement vector, K*J."""
        return self.snapshots * self.bands

    @classmethod
    def from_gamma(cls, gamma: float, height: int, width: int, bands: int = 1) -> "SensingShape":
        if not 0.0 < gamma <= 1.0:
            raise ConfigError(f"Compression ratio must lie in (0, 1], got {gamma}")
        if min(height, width, bands) < 1:
            raise ConfigError(f"Scene dims must be >= 1, got M={height} N={width} J={bands}")
        snapshots = max(1, math.floor(gamma * height * width + 0.5))
        return cls(height, width, bands, snapshots, gamma)


def binarize_ste(latent: Tensor) -> Tensor:
    """Map latent values to {-1, +1} with sign(0) = +1.

    The backward pass hands the upstream gradient to ``latent`` unchanged.
    """
    return ops.sign_ste(latent)


class CodedApertureBank:
    """K coded apertures of M×N pixels shared by all J spectral bands."""

    def __init__(
        self,
        latent: Parameter,
        mode: ApertureMode,
        shape: SensingShape,
        seed: int,
        init: ApertureInit = ApertureInit.UNIFORM,
    ) -> None:
        expected = (shape.snapshots, shape.pixels)
        if latent.shape != expected:
            raise ConfigError(f"Latent shape {latent.shape} does not match K x MN = {expected}")
        self.latent = latent
        self.mode = mode
        self.shape = shape
        self.seed = seed
        self.init = init

    @property
    def trainable(self) -> bool:
        return self.latent.requires_grad

    def parameters(self) -> list[Parameter]:
        """Parameters the optimizer should update."""
        return [self.latent] if self.trainable else []

    def realize(self) -> Tensor:
        """Realized sensing matrix H (records on an active tape)."""
        if self.mode == ApertureMode.BINARY:
            return binarize_ste(self.latent)
        return self.latent

    def realized_matrix(self) -> NDArray[Any]:
        """Realized sensing matrix as a plain array."""
        with no_grad():
            return self.realize().data.copy()

    def __repr__(self) -> str:
        s = self.shape
        return (
            f"{self.__class__.__name__}(K={s.snapshots}, M={s.height}, N={s.width}, "
            f"J={s.bands}, mode={self.mode.value})"
        )


def build_sensing(
    gamma: float,
    height: int,
    width: int,
    bands: int = 1,
    mode: ApertureMode = ApertureMode.BINARY,
    seed: int = 0,
    init: ApertureInit = ApertureInit.UNIFORM,
    trainable: bool = True,
    dtype: DType = "f32",
) -> CodedApertureBank:
    """Create a bank with K = round(gamma*M*N) apertures.

    Args:
        gamma: Compression ratio in (0, 1]
        height: Scene rows M
        width: Scene columns N
        bands: Spectral bands J sharing the apertures
        mode: Binary ({-1, +1} via sign/STE) or real-valued
        seed: Seed of the uniform latent initialization
        init: Uniform on [-1, 1] or the leading rows of a Hadamard matrix
        trainable: Whether the latent receives gradients
        dtype: Floating point precision of the latent

    Raises:
        ConfigError: gamma outside (0, 1] or a Hadamard init on a non power-of-two size
    """
    shape = SensingShape.from_gamma(gamma, height, width, bands)
    values: NDArray[Any]
    if init == ApertureInit.HADAMARD:
        n = shape.pixels
        if n & (n - 1):
            raise ConfigError(f"Hadamard init needs M*N to be a power of two, got {n}")
        values = hadamard(n)[: shape.snapshots].astype(np.float64)
    else:
        rng = np.random.default_rng(seed)
        values = rng.uniform(-1.0, 1.0, size=(shape.snapshots, shape.pixels))
    latent = Parameter(values, name="aperture.latent", requires_grad=trainable, dtype=dtype)
    bank = CodedApertureBank(latent, mode, shape, seed, init)
    logger.debug(
        "sensing_built",
        snapshots=shape.snapshots,
        pixels=shape.pixels,
        bands=bands,
        mode=mode.value,
        init=init.value,
        trainable=trainable,
    )
    return bank
