"""Dataset ingestion, preprocessing and synthetic scenes."""

from spckd.data.dataset import Dataset, flatten_scene, unflatten_scene
from spckd.data.idx import idx_bytes, parse_idx, read_idx
from spckd.data.manifest import experiment_dataset, load_dataset, parse_manifest
from spckd.data.mstn import parse_mstn, read_mstn, write_mstn
from spckd.data.synthetic import synth_dataset
from spckd.data.transforms import extract_patches, prepare_spectral, resize_bilinear, select_bands

__all__ = [
    "Dataset",
    "experiment_dataset",
    "extract_patches",
    "flatten_scene",
    "idx_bytes",
    "load_dataset",
    "parse_idx",
    "parse_manifest",
    "parse_mstn",
    "prepare_spectral",
    "read_idx",
    "read_mstn",
    "resize_bilinear",
    "select_bands",
    "synth_dataset",
    "unflatten_scene",
    "write_mstn",
]
