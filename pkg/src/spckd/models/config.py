"""Pydantic models for experiment configuration."""

from enum import Enum
from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator


class ApertureMode(str, Enum):
    """Value constraint of the coded apertures."""

    BINARY = "binary"  # realized entries in {-1, +1}
    REAL = "real"  # latent used verbatim


class ApertureInit(str, Enum):
    """How the latent aperture parameters are initialized."""

    UNIFORM = "uniform"
    HADAMARD = "hadamard"


class NoiseKind(str, Enum):
    NONE = "none"
    AWGN = "awgn"


class FeatureKind(str, Enum):
    """Which per-stage representation is distilled."""

    SPARSE = "sparse"  # soft-threshold outputs f^k
    NON_SPARSE = "non-sparse"  # stage reconstructions x^k


class OptimizerKind(str, Enum):
    SGD = "sgd"
    ADAM = "adam"


class Role(str, Enum):
    """What a training run produces."""

    TEACHER = "teacher"
    BASELINE = "baseline"
    STUDENT_KD = "student-kd"
    RANDOM_CA = "random-ca"  # E2E network on a frozen random binary aperture


class Split(str, Enum):
    TRAIN = "train"
    VAL = "val"
    TEST = "test"


class _StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class NoiseSpec(_StrictModel):
    """Measurement noise model."""

    kind: NoiseKind = Field(default=NoiseKind.NONE, description="Noise model")
    snr_db: float | None = Field(default=None, description="Target SNR in dB (AWGN only)")
    seed: int | None = Field(default=None, description="Noise seed (defaults to experiment seed)")

    @model_validator(mode="after")
    def check_snr(self) -> "NoiseSpec":
        if self.kind == NoiseKind.AWGN and self.snr_db is None:
            raise ValueError("AWGN noise requires snr_db")
        return self


class SensingConfig(_StrictModel):
    """Single-pixel camera geometry and aperture settings."""

    gamma: float = Field(default=0.1, gt=0.0, le=1.0, description="Compression ratio K/(M*N)")
    height: int = Field(default=32, ge=1, description="Scene rows M")
    width: int = Field(default=32, ge=1, description="Scene columns N")
    bands: int = Field(default=1, ge=1, description="Spectral bands J")
    mode: ApertureMode = Field(default=ApertureMode.BINARY, description="Aperture constraint")
    init: ApertureInit = Field(default=ApertureInit.UNIFORM, description="Latent initialization")
    trainable: bool = Field(default=True, description="Optimize the aperture")
    seed: int | None = Field(
        default=None, description="Aperture seed (defaults to experiment seed)"
    )
    noise: NoiseSpec = Field(default_factory=NoiseSpec)


class ProxConfig(_StrictModel):
    """Learned proximal autoencoder architecture."""

    channels: int = Field(default=32, ge=1, description="Channels C of internal convolutions")
    encoder_layers: int = Field(default=4, ge=1, description="conv+ReLU layers in F")
    decoder_layers: int = Field(default=3, ge=1, description="conv+ReLU layers in F~")


class DistillConfig(_StrictModel):
    """Knowledge-distillation loss settings."""

    inv_two_sigma_sq: float = Field(
        default=1e-6, gt=0.0, description="RBF coefficient 1/(2 sigma^2)"
    )
    feature_kind: FeatureKind = Field(default=FeatureKind.SPARSE)
    cc_weight: float = Field(default=1.0, ge=0.0, description="Correlation congruence weight")
    im_weight: float = Field(default=1.0, ge=0.0, description="Imitation loss weight")


class OptimizerConfig(_StrictModel):
    kind: OptimizerKind = Field(default=OptimizerKind.ADAM)
    learning_rate: float = Field(default=1e-4, gt=0.0)
    beta1: float = Field(default=0.9, ge=0.0, lt=1.0)
    beta2: float = Field(default=0.999, ge=0.0, lt=1.0)
    eps: float = Field(default=1e-8, gt=0.0)


class TrainConfig(_StrictModel):
    """Training loop settings."""

    role: Role = Field(default=Role.TEACHER)
    epochs: int = Field(default=50, ge=1)
    batch_size: int = Field(default=32, ge=1)
    max_iterations: int | None = Field(default=None, ge=1, description="Cap on optimizer steps")
    val_fraction: float = Field(
        default=0.1, ge=0.0, lt=1.0, description="Held-out share when no validation split exists"
    )
    task_loss: Literal["mse"] = "mse"
    optimizer: OptimizerConfig = Field(default_factory=OptimizerConfig)
    distill: DistillConfig | None = Field(default=None, description="Student-KD only")
    teacher_checkpoint: Path | None = Field(default=None, description="Student-KD only")

    @model_validator(mode="after")
    def check_role(self) -> "TrainConfig":
        if self.role == Role.STUDENT_KD:
            if self.teacher_checkpoint is None:
                raise ValueError("student-kd training requires teacher_checkpoint")
            if self.distill is None:
                self.distill = DistillConfig()
            if "optimizer" not in self.model_fields_set:
                self.optimizer = OptimizerConfig(learning_rate=1e-3)
        elif self.teacher_checkpoint is not None:
            raise ValueError(f"{self.role.value} training must not set teacher_checkpoint")
        return self


class DataConfig(_StrictModel):
    """Where samples come from and how they are preprocessed."""

    manifest: Path | None = Field(default=None, description="Split manifest file")
    synthetic_count: int | None = Field(
        default=None, ge=1, description="Generate this many synthetic samples instead"
    )
    resize: tuple[int, int] | None = Field(
        default=None, description="Bilinear resize target (rows, cols)"
    )
    spectral_patches: bool = Field(
        default=False, description="Resize to 200x200, select bands, tile 100x100 patches"
    )
    limit: int | None = Field(default=None, ge=1, description="Keep only the first samples")

    @model_validator(mode="after")
    def check_source(self) -> "DataConfig":
        if self.manifest is None and self.synthetic_count is None:
            raise ValueError("data needs either a manifest or synthetic_count")
        return self


class ExperimentConfig(_StrictModel):
    """Everything one CLI run needs."""

    id: str = Field(default="experiment", min_length=1)
    seed: int = Field(default=0, ge=0)
    dtype: Literal["f32", "f64"] = "f32"
    stages: int = Field(default=7, ge=1, description="Unrolled stages L")
    sensing: SensingConfig = Field(default_factory=SensingConfig)
    prox: ProxConfig = Field(default_factory=ProxConfig)
    train: TrainConfig = Field(default_factory=TrainConfig)
    data: DataConfig = Field(default_factory=lambda: DataConfig(synthetic_count=64))

    @property
    def aperture_seed(self) -> int:
        return self.sensing.seed if self.sensing.seed is not None else self.seed

    @property
    def network_seed(self) -> int:
        return self.seed + 1

    @property
    def shuffle_seed(self) -> int:
        return self.seed + 2

    @property
    def noise_seed(self) -> int:
        noise_seed = self.sensing.noise.seed
        return noise_seed if noise_seed is not None else self.seed + 3

    model_config = ConfigDict(
        extra="forbid",
        json_schema_extra={
            "examples": [
                {
                    "id": "teacher-g0.8",
                    "seed": 7,
                    "stages": 7,
                    "sensing": {"gamma": 0.8, "mode": "binary"},
                    "train": {"role": "teacher", "epochs": 50, "batch_size": 32},
                    "data": {"manifest": "fashion/manifest.txt", "resize": [32, 32]},
                }
            ]
        },
    )
