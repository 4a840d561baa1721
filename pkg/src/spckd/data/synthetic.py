"""Deterministic smooth random scenes for tests and smoke runs."""

import numpy as np

from spckd.data.dataset import Dataset
from spckd.errors import ConfigError
from spckd.models.config import Split

_COMPONENTS = 3
_MAX_CYCLES = 3.0


def synth_dataset(
    seed: int,
    count: int,
    height: int,
    width: int,
    bands: int = 1,
    split: Split = Split.TRAIN,
) -> Dataset:
    """Sums of low-frequency sinusoids per band, min-max normalized per sample."""
    if count < 1:
        raise ConfigError(f"Synthetic dataset needs count >= 1, got {count}")
    rng = np.random.default_rng(seed)
    rows = np.linspace(0.0, 1.0, height)[:, None]
    cols = np.linspace(0.0, 1.0, width)[None, :]
    images = np.empty((count, height, width, bands), dtype=np.float32)
    for p in range(count):
        field = np.zeros((height, width, bands))
        for j in range(bands):
            for _ in range(_COMPONENTS):
                fy, fx = rng.uniform(-_MAX_CYCLES, _MAX_CYCLES, size=2)
                phase = rng.uniform(0.0, 2 * np.pi)
                amplitude = rng.uniform(0.5, 1.0)
                field[:, :, j] += amplitude * np.sin(2 * np.pi * (fy * rows + fx * cols) + phase)
        low, high = field.min(), field.max()
        normalized = (field - low) / (high - low) if high > low else np.full_like(field, 0.5)
        images[p] = np.clip(normalized, 0.0, 1.0)
    return Dataset(images, split, provenance=f"synthetic(seed={seed})")
