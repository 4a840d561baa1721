"""In-memory scene collections."""

from collections.abc import Iterator
from dataclasses import dataclass
from typing import Any

import numpy as np
from numpy.typing import NDArray

from spckd.errors import ConfigError, ShapeError
from spckd.models.config import Split


def flatten_scene(images: NDArray[Any]) -> NDArray[Any]:
    """(…, H, W, J) images to band-major vectors (…, J*H*W)."""
    lead = images.shape[:-3]
    h, w, j = images.shape[-3:]
    moved = np.moveaxis(images, -1, -3)
    return moved.reshape(*lead, j * h * w)


def unflatten_scene(vectors: NDArray[Any], height: int, width: int, bands: int) -> NDArray[Any]:
    """Inverse of :func:`flatten_scene`."""
    lead = vectors.shape[:-1]
    cube = vectors.reshape(*lead, bands, height, width)
    return np.moveaxis(cube, -3, -1)


@dataclass
class Dataset:
    """Scenes of one split, stored as (P, H, W, J) images with values in [0, 1]."""

    images: NDArray[Any]
    split: Split = Split.TRAIN
    provenance: str = "memory"

    def __post_init__(self) -> None:
        if self.images.ndim != 4:
            raise ShapeError(f"Dataset images must be (P, H, W, J), got {self.images.shape}")
        if self.images.size and (self.images.min() < 0.0 or self.images.max() > 1.0):
            raise ConfigError(
                f"Dataset {self.provenance!r} has values outside [0, 1] "
                f"(min={self.images.min()}, max={self.images.max()})"
            )

    def __len__(self) -> int:
        return int(self.images.shape[0])

    @property
    def height(self) -> int:
        return int(self.images.shape[1])

    @property
    def width(self) -> int:
        return int(self.images.shape[2])

    @property
    def bands(self) -> int:
        return int(self.images.shape[3])

    @property
    def vectors(self) -> NDArray[Any]:
        """Samples flattened band-major, shape (P, M*N*J)."""
        return flatten_scene(self.images)

    def subset(self, indices: NDArray[Any] | list[int], split: Split | None = None) -> "Dataset":
        images = self.images[np.asarray(indices, dtype=int)]
        return Dataset(images, split or self.split, self.provenance)

    def take(self, count: int) -> "Dataset":
        return self.subset(list(range(min(count, len(self)))))

    def split_off(self, fraction: float, seed: int) -> tuple["Dataset", "Dataset | None"]:
        """Hold out a seed-shuffled ``fraction`` of samples as a validation split."""
        held = int(round(fraction * len(self)))
        if held == 0 or held >= len(self):
            return self, None
        order = np.random.default_rng(seed).permutation(len(self))
        val = self.subset(np.sort(order[:held]), Split.VAL)
        train = self.subset(np.sort(order[held:]))
        return train, val

    def batches(self, batch_size: int, order: NDArray[Any] | None = None) -> Iterator[NDArray[Any]]:
        """Yield index arrays of at most ``batch_size`` samples."""
        order = np.arange(len(self)) if order is None else order
        for start in range(0, len(order), batch_size):
            yield order[start : start + batch_size]

    def __repr__(self) -> str:
        return (
            f"Dataset(split={self.split.value}, count={len(self)}, "
            f"shape={self.images.shape[1:]}, provenance={self.provenance!r})"
        )
