"""Split manifests and experiment dataset assembly.

A manifest lists one ``<split> <path>`` pair per line; ``#`` starts a
comment and relative paths resolve against the manifest's directory.
``.mstn`` files load as multispectral tensors, everything else as IDX.
"""

from pathlib import Path
from typing import Any

import numpy as np
import structlog
from numpy.typing import NDArray

from spckd.data.dataset import Dataset
from spckd.data.idx import read_idx
from spckd.data.mstn import read_mstn
from spckd.data.synthetic import synth_dataset
from spckd.data.transforms import prepare_spectral, resize_bilinear, select_bands
from spckd.errors import ConfigError, FormatError, ShapeError
from spckd.models.config import DataConfig, ExperimentConfig, Split

logger = structlog.get_logger(__name__)

_SPLIT_SEED_OFFSET = {Split.TRAIN: 0, Split.VAL: 7919, Split.TEST: 15838}


def parse_manifest(path: Path) -> dict[Split, list[Path]]:
    """Map each split to its files in listing order."""
    entries: dict[Split, list[Path]] = {split: [] for split in Split}
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        text = line.split("#", 1)[0].strip()
        if not text:
            continue
        parts = text.split(maxsplit=1)
        if len(parts) != 2:
            raise FormatError(f"{path}:{lineno}: expected '<split> <path>', got {text!r}")
        try:
            split = Split(parts[0].lower())
        except ValueError as exc:
            raise FormatError(f"{path}:{lineno}: unknown split {parts[0]!r}") from exc
        file = Path(parts[1])
        entries[split].append(file if file.is_absolute() else path.parent / file)
    return entries


def _read_images(path: Path) -> NDArray[Any]:
    """Raw (count, H, W, J) images of one file.

    IDX intensities come back in [0, 1]; MSTN values are returned as stored.
    """
    if path.suffix == ".mstn":
        images = read_mstn(path)
        if images.size and images.min() < 0.0:
            raise FormatError(f"{path} holds negative intensities")
        return images
    values = read_idx(path)
    if values.ndim == 2:
        values = values[None]
    if values.ndim == 3:
        values = values[..., None]
    if values.ndim != 4:
        raise FormatError(f"{path} has {values.ndim} IDX dims, expected 2 to 4")
    return values


def _preprocess(images: NDArray[Any], data: DataConfig, bands: int) -> NDArray[Any]:
    out: list[NDArray[Any]] = []
    for img in images:
        if data.spectral_patches:
            out.extend(prepare_spectral(img, bands))
            continue
        if data.resize is not None:
            img = resize_bilinear(img, *data.resize)
        if img.shape[2] != bands:
            img = select_bands(img, bands)
        out.append(img)
    if not out:
        return np.empty((0, *images.shape[1:3], bands), dtype=np.float32)
    return np.clip(np.stack(out), 0.0, 1.0).astype(np.float32)


def load_dataset(manifest: Path, split: Split, data: DataConfig, bands: int = 1) -> Dataset:
    """Load and preprocess every file the manifest lists for ``split``.

    MSTN files are normalized by the maximum over all MSTN files of the split.
    """
    files = parse_manifest(manifest)[split]
    if not files:
        return Dataset(np.empty((0, 1, 1, bands), dtype=np.float32), split, str(manifest))
    raw = [_read_images(f) for f in files]
    spectral = [i for i, f in enumerate(files) if f.suffix == ".mstn"]
    peak = max((float(raw[i].max()) for i in spectral if raw[i].size), default=0.0)
    if peak > 0.0:
        # one scale for every MSTN file of the split
        for i in spectral:
            raw[i] = raw[i] / peak
    chunks = [_preprocess(images, data, bands) for images in raw]
    shapes = {c.shape[1:] for c in chunks if len(c)}
    if len(shapes) > 1:
        raise ShapeError(f"Files of split {split.value} disagree on sample shape: {sorted(shapes)}")
    images = np.concatenate(chunks) if len(chunks) > 1 else chunks[0]
    if data.limit is not None:
        images = images[: data.limit]
    dataset = Dataset(images, split, provenance=str(manifest))
    logger.info("dataset_loaded", manifest=str(manifest), split=split.value, count=len(dataset))
    return dataset


def experiment_dataset(
    config: ExperimentConfig, split: Split, manifest: Path | None = None
) -> Dataset:
    """The ``split`` samples an experiment trains or evaluates on.

    ``manifest`` overrides the configured data source.

    Raises:
        ShapeError: Loaded scenes do not match the sensing geometry
    """
    s = config.sensing
    source = manifest or config.data.manifest
    if source is None:
        assert config.data.synthetic_count is not None
        count = config.data.synthetic_count
        if config.data.limit is not None:
            count = min(count, config.data.limit)
        return synth_dataset(
            config.seed + _SPLIT_SEED_OFFSET[split], count, s.height, s.width, s.bands, split
        )
    if not source.exists():
        raise ConfigError(f"Manifest not found: {source}")
    dataset = load_dataset(source, split, config.data, s.bands)
    geometry = (dataset.height, dataset.width, dataset.bands)
    if len(dataset) and geometry != (s.height, s.width, s.bands):
        raise ShapeError(
            f"Scenes are {dataset.height}x{dataset.width}x{dataset.bands}, "
            f"sensing expects {s.height}x{s.width}x{s.bands}"
        )
    return dataset
