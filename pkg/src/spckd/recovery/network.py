"""ADMM-unrolled reconstruction network with learned proximal operators."""

from collections.abc import Iterator
from dataclasses import dataclass, field

import numpy as np
import structlog

from spckd.errors import ConfigError, ShapeError
from spckd.models.config import ProxConfig
from spckd.numerics import ops
from spckd.numerics.tensor import DType, Parameter, Tensor
from spckd.sensing.aperture import CodedApertureBank, SensingShape
from spckd.sensing.operators import reproject, spc_forward

logger = structlog.get_logger(__name__)

ALPHA_INIT = 0.1
RHO_INIT = 0.1
BETA_INIT = 0.01


class ConvLayer:
    """3×3 same-padded convolution with bias."""

    def __init__(
        self,
        name: str,
        in_channels: int,
        out_channels: int,
        rng: np.random.Generator,
        dtype: DType,
    ) -> None:
        bound = np.sqrt(6.0 / (9 * in_channels))
        weights = rng.uniform(-bound, bound, size=(3, 3, in_channels, out_channels))
        self.kernel = Parameter(weights, name=f"{name}.kernel", dtype=dtype)
        self.bias = Parameter(np.zeros(out_channels), name=f"{name}.bias", dtype=dtype)

    def __call__(self, x: Tensor) -> Tensor:
        return ops.conv2d_same(x, self.kernel, self.bias)

    def parameters(self) -> list[Parameter]:
        return [self.kernel, self.bias]


class StageParams:
    """Learnable parameters of one unrolled stage.

    alpha (step size), rho (penalty), beta (shrinkage threshold), the encoder
    F (conv+ReLU layers) and the decoder F~ (conv+ReLU layers followed by a
    restore convolution to one channel per band).
    """

    def __init__(
        self,
        index: int,
        shape: SensingShape,
        prox: ProxConfig,
        rng: np.random.Generator,
        dtype: DType = "f32",
    ) -> None:
        prefix = f"stage{index}"
        self.index = index
        self.shape = shape
        self.prox = prox
        self.alpha = Parameter(ALPHA_INIT, name=f"{prefix}.alpha", dtype=dtype)
        self.rho = Parameter(RHO_INIT, name=f"{prefix}.rho", dtype=dtype)
        self.beta = Parameter(BETA_INIT, name=f"{prefix}.beta", dtype=dtype)
        c = prox.channels
        self.encoder = [
            ConvLayer(f"{prefix}.encoder.{i}", 1 if i == 0 else c, c, rng, dtype)
            for i in range(prox.encoder_layers)
        ]
        self.decoder = [
            ConvLayer(f"{prefix}.decoder.{i}", c, c, rng, dtype)
            for i in range(prox.decoder_layers)
        ]
        self.restore = ConvLayer(f"{prefix}.restore", c, 1, rng, dtype)

    def parameters(self) -> list[Parameter]:
        params = [self.alpha, self.rho, self.beta]
        for layer in [*self.encoder, *self.decoder, self.restore]:
            params.extend(layer.parameters())
        return params


@dataclass
class StageOutput:
    x: Tensor
    u: Tensor
    z: Tensor
    f: Tensor


@dataclass
class ReconstructionTrace:
    """Per-stage states of one unrolled forward pass (all batched)."""

    x0: Tensor
    x_stages: list[Tensor] = field(default_factory=list)
    u_stages: list[Tensor] = field(default_factory=list)
    z_stages: list[Tensor] = field(default_factory=list)
    sparse_codes: list[Tensor] = field(default_factory=list)

    @property
    def stages(self) -> int:
        return len(self.x_stages)

    @property
    def reconstruction(self) -> Tensor:
        """Final estimate x^L."""
        return self.x_stages[-1]

    def append(self, output: StageOutput) -> None:
        self.x_stages.append(output.x)
        self.u_stages.append(output.u)
        self.z_stages.append(output.z)
        self.sparse_codes.append(output.f)


class RecoveryNet:
    """L independent stages (no weight sharing)."""

    def __init__(
        self,
        shape: SensingShape,
        stages: int = 7,
        prox: ProxConfig | None = None,
        seed: int = 0,
        dtype: DType = "f32",
    ) -> None:
        if stages < 1:
            raise ConfigError(f"Stage count must be >= 1, got {stages}")
        self.shape = shape
        self.prox = prox or ProxConfig()
        self.dtype = dtype
        rng = np.random.default_rng(seed)
        self.stages = [StageParams(k + 1, shape, self.prox, rng, dtype) for k in range(stages)]

    @property
    def num_stages(self) -> int:
        return len(self.stages)

    def parameters(self) -> list[Parameter]:
        return [p for stage in self.stages for p in stage.parameters()]

    def named_parameters(self) -> Iterator[tuple[str, Parameter]]:
        for p in self.parameters():
            assert p.name is not None
            yield p.name, p

    def freeze(self) -> None:
        """Stop gradient flow into every parameter."""
        for p in self.parameters():
            p.requires_grad = False

    def __repr__(self) -> str:
        return (
            f"{self.__class__.__name__}(L={self.num_stages}, C={self.prox.channels}, "
            f"M={self.shape.height}, N={self.shape.width}, J={self.shape.bands})"
        )


def prox_apply(stage: StageParams, v: Tensor) -> tuple[Tensor, Tensor]:
    """Learned proximal mapping z = F~(soft(F(v), beta)).

    ``v`` is a batch of flattened scenes (B, M*N*J). Bands are stacked into
    the convolution batch, so F sees one channel per image.

    Returns:
        z with the shape of ``v`` and the sparse code f of shape (B, M*N*C*J)
    """
    s = stage.shape
    if v.data.ndim != 2 or v.shape[1] != s.signal_size:
        raise ShapeError(f"prox input must be (B, {s.signal_size}), got {v.shape}")
    batch = v.shape[0]
    h = ops.reshape(v, (batch * s.bands, s.height, s.width, 1))
    for layer in stage.encoder:
        h = ops.relu(layer(h))
    code = ops.soft_threshold(h, stage.beta)
    h = code
    for layer in stage.decoder:
        h = ops.relu(layer(h))
    restored = stage.restore(h)
    z = ops.reshape(restored, (batch, s.signal_size))
    f = ops.reshape(code, (batch, s.signal_size * stage.prox.channels))
    return z, f


def admm_stage(
    stage: StageParams,
    bank: CodedApertureBank,
    y: Tensor,
    x: Tensor,
    u: Tensor,
    matrix: Tensor | None = None,
) -> StageOutput:
    """One unrolled iteration: z-step (learned prox), x-step (gradient), dual update.

    The data-fidelity gradient uses the normalized adjoint (1/K)·Hᵀ, the same
    operator as the re-projection. With raw Hᵀ this is the step α/K and the
    penalty K·ρ.
    """
    h = bank.realize() if matrix is None else matrix
    z, f = prox_apply(stage, x + u)
    residual = spc_forward(bank, x, matrix=h) - y
    fidelity = reproject(bank, residual, matrix=h)
    penalty = (x - z + u) * stage.rho
    x_next = x - (fidelity + penalty) * stage.alpha
    u_next = u + (x_next - z)
    return StageOutput(x_next, u_next, z, f)


def unrolled_forward(
    net: RecoveryNet,
    bank: CodedApertureBank,
    y: Tensor,
    matrix: Tensor | None = None,
) -> ReconstructionTrace:
    """Run all L stages from x⁰ = (1/K)Hᵀy and u⁰ = 0.

    ``y`` may be a single measurement vector or a batch; the trace is batched.
    """
    if y.data.ndim == 1:
        y = ops.reshape(y, (1, y.shape[0]))
    h = bank.realize() if matrix is None else matrix
    x = reproject(bank, y, matrix=h)
    u = Tensor(np.zeros_like(x.data))
    trace = ReconstructionTrace(x0=x)
    for stage in net.stages:
        step = admm_stage(stage, bank, y, x, u, matrix=h)
        trace.append(step)
        x, u = step.x, step.u
    return trace
