"""Pytest configuration and fixtures for spckd tests."""

from collections.abc import Callable, Generator
from pathlib import Path

import numpy as np
import pytest

from spckd.config.settings import SpckdSettings, reload_settings
from spckd.data.dataset import Dataset
from spckd.data.synthetic import synth_dataset
from spckd.models.config import (
    ApertureMode,
    DataConfig,
    ExperimentConfig,
    OptimizerConfig,
    ProxConfig,
    SensingConfig,
    TrainConfig,
)
from spckd.numerics.tensor import DType, Parameter
from spckd.sensing.aperture import CodedApertureBank, SensingShape

BankFactory = Callable[..., CodedApertureBank]


@pytest.fixture(autouse=True)
def reset_settings() -> Generator[None, None, None]:
    """Reset settings cache before each test."""
    reload_settings()
    yield
    reload_settings()


@pytest.fixture
def test_settings(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> SpckdSettings:
    """Settings with XDG directories under a temporary path."""
    monkeypatch.setenv("XDG_CONFIG_HOME", str(tmp_path / "config"))
    monkeypatch.setenv("XDG_DATA_HOME", str(tmp_path / "data"))
    monkeypatch.setenv("XDG_CACHE_HOME", str(tmp_path / "cache"))
    return reload_settings()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def bank_from_matrix() -> BankFactory:
    """Build a real-valued bank around an explicit K x (M*N) matrix."""

    def build(
        matrix: list[list[float]] | np.ndarray,
        height: int,
        width: int,
        bands: int = 1,
        mode: ApertureMode = ApertureMode.REAL,
        dtype: DType = "f64",
    ) -> CodedApertureBank:
        values = np.asarray(matrix, dtype=np.float64)
        snapshots = values.shape[0]
        shape = SensingShape(height, width, bands, snapshots, snapshots / (height * width))
        latent = Parameter(values, name="aperture.latent", dtype=dtype)
        return CodedApertureBank(latent, mode, shape, seed=0)

    return build


@pytest.fixture
def tiny_config() -> ExperimentConfig:
    """8x8 scenes, two stages, four channels: fast enough for training runs."""
    return ExperimentConfig(
        id="tiny",
        seed=3,
        stages=2,
        sensing=SensingConfig(gamma=0.5, height=8, width=8),
        prox=ProxConfig(channels=4),
        train=TrainConfig(
            epochs=20,
            batch_size=16,
            val_fraction=0.0,
            optimizer=OptimizerConfig(learning_rate=1e-2),
        ),
        data=DataConfig(synthetic_count=16),
    )


@pytest.fixture
def tiny_dataset(tiny_config: ExperimentConfig) -> Dataset:
    s = tiny_config.sensing
    return synth_dataset(tiny_config.seed, 16, s.height, s.width, s.bands)
