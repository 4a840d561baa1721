"""Tests for dataset ingestion, preprocessing and synthetic scenes."""

import gzip
from pathlib import Path

import numpy as np
import pytest

from spckd.data.dataset import Dataset, flatten_scene, unflatten_scene
from spckd.data.idx import idx_bytes, parse_idx, read_idx
from spckd.data.manifest import experiment_dataset, load_dataset, parse_manifest
from spckd.data.mstn import mstn_bytes, parse_mstn, read_mstn, write_mstn
from spckd.data.synthetic import synth_dataset
from spckd.data.transforms import (
    extract_patches,
    prepare_spectral,
    resize_bilinear,
    select_bands,
)
from spckd.errors import ConfigError, FormatError, ShapeError
from spckd.models.config import DataConfig, ExperimentConfig, SensingConfig, Split


class TestIdx:
    """Test the IDX parser."""

    def test_three_dims(self) -> None:
        """Dims (2, 2, 2) with bytes 0..7 scale by 1/255."""
        raw = bytes([0, 0, 8, 3]) + bytes([0, 0, 0, 2] * 3) + bytes(range(8))
        values = parse_idx(raw)
        assert values.shape == (2, 2, 2)
        np.testing.assert_array_equal(values.ravel(), np.arange(8) / 255.0)

    def test_vector(self) -> None:
        """A single dimension gives a vector."""
        raw = bytes([0, 0, 8, 1, 0, 0, 0, 3, 10, 20, 255])
        np.testing.assert_array_equal(parse_idx(raw), [10 / 255, 20 / 255, 1.0])

    def test_short_payload(self) -> None:
        """A payload shorter than the dims imply is rejected."""
        raw = bytes([0, 0, 8, 1, 0, 0, 0, 3, 10, 20])
        with pytest.raises(FormatError) as exc_info:
            parse_idx(raw)
        assert exc_info.value.offset == len(raw)

    def test_bad_magic(self) -> None:
        """Non-zero leading bytes fail at offset 0."""
        with pytest.raises(FormatError) as exc_info:
            parse_idx(bytes([1, 0, 8, 1, 0, 0, 0, 1, 5]))
        assert exc_info.value.offset == 0

    def test_unsupported_type(self) -> None:
        """Only unsigned bytes are supported."""
        with pytest.raises(FormatError) as exc_info:
            parse_idx(bytes([0, 0, 0x0D, 1, 0, 0, 0, 1, 5, 5, 5, 5]))
        assert exc_info.value.offset == 2

    def test_truncated_dims(self) -> None:
        """Missing dimension words are a format error."""
        with pytest.raises(FormatError):
            parse_idx(bytes([0, 0, 8, 3, 0, 0, 0, 2]))

    def test_trailing_bytes(self) -> None:
        """Extra bytes after the payload are rejected."""
        with pytest.raises(FormatError):
            parse_idx(bytes([0, 0, 8, 1, 0, 0, 0, 1, 5, 6]))

    def test_gzip_file(self, tmp_path: Path) -> None:
        """*.gz files are decompressed transparently."""
        images = np.arange(24, dtype=np.uint8).reshape(2, 3, 4)
        plain = tmp_path / "images-idx3-ubyte"
        packed = tmp_path / "images-idx3-ubyte.gz"
        plain.write_bytes(idx_bytes(images))
        packed.write_bytes(gzip.compress(idx_bytes(images)))
        np.testing.assert_array_equal(read_idx(plain), read_idx(packed))
        np.testing.assert_array_equal(read_idx(packed) * 255.0, images)


class TestMstn:
    """Test the multispectral tensor format."""

    def test_round_trip(self, tmp_path: Path) -> None:
        """A random 2x4x4x8 set survives write/read bit for bit."""
        images = np.random.default_rng(0).random((2, 4, 4, 8)).astype(np.float32)
        path = tmp_path / "cube.mstn"
        write_mstn(images, path)
        loaded = read_mstn(path)
        assert loaded.dtype == np.float32
        np.testing.assert_array_equal(loaded, images)

    def test_header_layout(self) -> None:
        """Magic then six little-endian u32 fields."""
        raw = mstn_bytes(np.zeros((1, 2, 3, 4), dtype=np.float32))
        assert raw[:4] == b"MSTN"
        assert np.frombuffer(raw[4:28], dtype="<u4").tolist() == [1, 1, 2, 3, 4, 0]
        assert len(raw) == 28 + 24 * 4

    def test_empty(self) -> None:
        """count = 0 is valid."""
        assert parse_mstn(mstn_bytes(np.zeros((0, 4, 4, 2)))).shape == (0, 4, 4, 2)

    def test_payload_short(self) -> None:
        """A declared size exceeding the payload is rejected."""
        raw = mstn_bytes(np.ones((2, 2, 2, 2), dtype=np.float32))
        with pytest.raises(FormatError):
            parse_mstn(raw[:-4])

    @pytest.mark.parametrize(
        ("offset", "value", "match"),
        [
            (0, b"NOPE", "magic"),
            (4, b"\x02\x00\x00\x00", "version"),
            (24, b"\x01\x00\x00\x00", "dtype"),
        ],
    )
    def test_bad_header(self, offset: int, value: bytes, match: str) -> None:
        """Magic, version and dtype code are checked."""
        raw = bytearray(mstn_bytes(np.ones((1, 2, 2, 1), dtype=np.float32)))
        raw[offset : offset + 4] = value
        with pytest.raises(FormatError, match=match):
            parse_mstn(bytes(raw))

    def test_not_four_dimensional(self) -> None:
        """Only (count, H, W, J) tensors can be written."""
        with pytest.raises(ShapeError):
            mstn_bytes(np.zeros((2, 2, 2)))


class TestResize:
    """Test corner-aligned bilinear resizing."""

    def test_same_size_identity(self) -> None:
        """Resizing to the same size returns the image."""
        img = np.random.default_rng(1).random((5, 7, 2))
        np.testing.assert_array_equal(resize_bilinear(img, 5, 7), img)

    def test_constant_stays_constant(self) -> None:
        """A constant 0.5 image stays 0.5."""
        out = resize_bilinear(np.full((28, 28), 0.5), 32, 32)
        assert out.shape == (32, 32, 1)
        np.testing.assert_allclose(out, 0.5, atol=1e-12)

    def test_center_of_checkerboard(self) -> None:
        """[[0,1],[1,0]] to 3x3 has center 0.5 and keeps its corners."""
        out = resize_bilinear(np.array([[0.0, 1.0], [1.0, 0.0]]), 3, 3)[:, :, 0]
        assert out[1, 1] == pytest.approx(0.5)
        assert out[0, 0] == pytest.approx(0.0)
        assert out[0, 2] == pytest.approx(1.0)

    def test_band_permutation_commutes(self) -> None:
        """Resizing is band independent."""
        img = np.random.default_rng(2).random((6, 6, 3))
        perm = [2, 0, 1]
        np.testing.assert_array_equal(
            resize_bilinear(img[:, :, perm], 9, 4), resize_bilinear(img, 9, 4)[:, :, perm]
        )

    def test_invalid_target(self) -> None:
        """Non-positive targets are rejected."""
        with pytest.raises(ConfigError):
            resize_bilinear(np.zeros((4, 4)), 0, 4)


class TestPatches:
    """Test non-overlapping patch tiling."""

    @pytest.mark.parametrize(
        ("shape", "expected"), [((200, 200), 4), ((100, 100), 1), ((150, 100), 1)]
    )
    def test_counts(self, shape: tuple[int, int], expected: int) -> None:
        """Partial edge tiles are discarded."""
        assert len(extract_patches(np.zeros((*shape, 2)), 100)) == expected

    def test_partition(self) -> None:
        """Patches reassemble to the cropped source."""
        img = np.random.default_rng(3).random((9, 7, 2))
        patches = extract_patches(img, 3)
        assert len(patches) == 6
        rows = [np.concatenate(patches[r * 2 : r * 2 + 2], axis=1) for r in range(3)]
        np.testing.assert_array_equal(np.concatenate(rows, axis=0), img[:9, :6])

    def test_too_large(self) -> None:
        """A patch larger than the image is a configuration error."""
        with pytest.raises(ConfigError):
            extract_patches(np.zeros((50, 200)), 100)


class TestBands:
    """Test spectral band selection and the spectral pipeline."""

    def test_nearest_index(self) -> None:
        """31 bands to 8 picks evenly spaced indices including both ends."""
        img = np.broadcast_to(np.arange(31, dtype=float), (2, 2, 31))
        picked = select_bands(img, 8)[0, 0]
        assert picked[0] == 0 and picked[-1] == 30
        assert len(picked) == 8

    def test_too_many_bands(self) -> None:
        """Cannot select more bands than available."""
        with pytest.raises(ConfigError):
            select_bands(np.zeros((2, 2, 3)), 4)

    def test_prepare_spectral(self) -> None:
        """A 31-band cube yields four 100x100x8 patches."""
        cube = np.random.default_rng(4).random((60, 64, 31))
        patches = prepare_spectral(cube, 8)
        assert len(patches) == 4
        assert all(p.shape == (100, 100, 8) for p in patches)


class TestDataset:
    """Test the in-memory dataset."""

    def test_band_major_flatten(self) -> None:
        """Band j occupies entries [j*H*W, (j+1)*H*W)."""
        images = np.zeros((1, 2, 2, 2))
        images[0, :, :, 1] = 1.0
        vector = flatten_scene(images)[0]
        np.testing.assert_array_equal(vector, [0, 0, 0, 0, 1, 1, 1, 1])
        np.testing.assert_array_equal(unflatten_scene(vector, 2, 2, 2), images[0])

    def test_values_checked(self) -> None:
        """Values outside [0, 1] fail loading."""
        with pytest.raises(ConfigError):
            Dataset(np.full((1, 2, 2, 1), 1.5))

    def test_shape_checked(self) -> None:
        """Images must be four dimensional."""
        with pytest.raises(ShapeError):
            Dataset(np.zeros((2, 2, 2)))

    def test_split_off(self) -> None:
        """A fraction is held out deterministically and disjointly."""
        data = synth_dataset(0, 10, 4, 4)
        train, val = data.split_off(0.2, seed=5)
        again, _ = data.split_off(0.2, seed=5)
        assert val is not None
        assert (len(train), len(val)) == (8, 2)
        assert val.split == Split.VAL
        np.testing.assert_array_equal(train.images, again.images)

    def test_split_off_nothing(self) -> None:
        """A fraction rounding to zero keeps everything."""
        data = synth_dataset(0, 3, 4, 4)
        train, val = data.split_off(0.1, seed=5)
        assert train is data
        assert val is None

    def test_batches(self) -> None:
        """Batches follow the given order with a short last batch."""
        data = synth_dataset(0, 5, 4, 4)
        order = np.array([4, 3, 2, 1, 0])
        batches = [b.tolist() for b in data.batches(2, order)]
        assert batches == [[4, 3], [2, 1], [0]]


class TestSynthetic:
    """Test deterministic synthetic scenes."""

    def test_deterministic(self) -> None:
        """Same seed gives bit-identical data."""
        a = synth_dataset(11, 4, 8, 8, bands=2)
        b = synth_dataset(11, 4, 8, 8, bands=2)
        np.testing.assert_array_equal(a.images, b.images)

    def test_bands_and_range(self) -> None:
        """J = 8 bands, every sample within [0, 1]."""
        data = synth_dataset(1, 3, 6, 6, bands=8)
        assert data.bands == 8
        assert data.images.min() >= 0.0
        assert data.images.max() <= 1.0

    def test_count_checked(self) -> None:
        """count must be at least one."""
        with pytest.raises(ConfigError):
            synth_dataset(0, 0, 4, 4)


class TestManifest:
    """Test manifests and experiment dataset assembly."""

    @pytest.fixture
    def manifest(self, tmp_path: Path) -> Path:
        rng = np.random.default_rng(6)
        train = rng.integers(0, 256, (5, 6, 6), dtype=np.uint8)
        (tmp_path / "train.idx").write_bytes(idx_bytes(train))
        (tmp_path / "test.idx.gz").write_bytes(
            gzip.compress(idx_bytes(rng.integers(0, 256, (3, 6, 6), dtype=np.uint8)))
        )
        path = tmp_path / "manifest.txt"
        path.write_text("# fixture\ntrain train.idx\n\ntest test.idx.gz  # held out\n")
        return path

    def test_parse(self, manifest: Path) -> None:
        """Relative paths resolve against the manifest directory."""
        entries = parse_manifest(manifest)
        assert entries[Split.TRAIN] == [manifest.parent / "train.idx"]
        assert entries[Split.VAL] == []
        assert entries[Split.TEST] == [manifest.parent / "test.idx.gz"]

    def test_bad_line(self, tmp_path: Path) -> None:
        """Unknown splits are format errors."""
        path = tmp_path / "bad.txt"
        path.write_text("holdout data.idx\n")
        with pytest.raises(FormatError):
            parse_manifest(path)

    def test_load_with_resize(self, manifest: Path) -> None:
        """IDX samples load as (P, H, W, 1) and are resized on request."""
        data = load_dataset(manifest, Split.TRAIN, DataConfig(manifest=manifest, resize=(8, 8)))
        assert data.images.shape == (5, 8, 8, 1)
        assert data.images.dtype == np.float32

    def test_limit(self, manifest: Path) -> None:
        """limit keeps the first samples."""
        data = load_dataset(manifest, Split.TRAIN, DataConfig(manifest=manifest, limit=2))
        assert len(data) == 2

    def test_mstn_normalized_by_max(self, tmp_path: Path) -> None:
        """MSTN intensities are scaled by the dataset maximum."""
        write_mstn(np.full((2, 4, 4, 3), 4.0, dtype=np.float32), tmp_path / "cube.mstn")
        manifest = tmp_path / "m.txt"
        manifest.write_text("train cube.mstn\n")
        data = load_dataset(manifest, Split.TRAIN, DataConfig(manifest=manifest), bands=3)
        np.testing.assert_array_equal(data.images, 1.0)

    def test_mstn_shares_one_scale(self, tmp_path: Path) -> None:
        """All MSTN files of a split are divided by the largest value among them."""
        write_mstn(np.full((1, 4, 4, 2), 2.0, dtype=np.float32), tmp_path / "a.mstn")
        write_mstn(np.full((1, 4, 4, 2), 4.0, dtype=np.float32), tmp_path / "b.mstn")
        manifest = tmp_path / "m.txt"
        manifest.write_text("train a.mstn\ntrain b.mstn\n")
        data = load_dataset(manifest, Split.TRAIN, DataConfig(manifest=manifest), bands=2)
        np.testing.assert_allclose(data.images.max(axis=(1, 2, 3)), [0.5, 1.0])

    def test_mstn_below_one_is_rescaled(self, tmp_path: Path) -> None:
        """A dataset whose peak is under one still ends with a peak of one."""
        cube = np.linspace(0.0, 0.5, 32, dtype=np.float32).reshape(2, 4, 4, 1)
        write_mstn(cube, tmp_path / "dim.mstn")
        manifest = tmp_path / "m.txt"
        manifest.write_text("train dim.mstn\n")
        data = load_dataset(manifest, Split.TRAIN, DataConfig(manifest=manifest))
        assert float(data.images.max()) == pytest.approx(1.0)
        np.testing.assert_allclose(data.images, cube * 2.0, atol=1e-6)

    def test_spectral_patches(self, tmp_path: Path) -> None:
        """Two 31-band scenes tile into eight 100x100 patches of eight bands."""
        rng = np.random.default_rng(8)
        scenes = rng.uniform(0.0, 3.0, (2, 128, 128, 31)).astype(np.float32)
        write_mstn(scenes, tmp_path / "arad.mstn")
        manifest = tmp_path / "m.txt"
        manifest.write_text("test arad.mstn\n")
        config = DataConfig(manifest=manifest, spectral_patches=True)
        data = load_dataset(manifest, Split.TEST, config, bands=8)
        assert data.images.shape == (8, 100, 100, 8)
        assert float(data.images.min()) >= 0.0
        assert float(data.images.max()) <= 1.0

    def test_experiment_geometry_checked(self, manifest: Path) -> None:
        """Scenes must match the sensing geometry."""
        config = ExperimentConfig(
            sensing=SensingConfig(height=8, width=8), data=DataConfig(manifest=manifest)
        )
        with pytest.raises(ShapeError):
            experiment_dataset(config, Split.TRAIN)
        resized = config.model_copy(
            update={"data": DataConfig(manifest=manifest, resize=(8, 8))}
        )
        assert len(experiment_dataset(resized, Split.TEST)) == 3

    def test_synthetic_splits_differ(self, tiny_config: ExperimentConfig) -> None:
        """Synthetic train and test splits use different seeds."""
        train = experiment_dataset(tiny_config, Split.TRAIN)
        test = experiment_dataset(tiny_config, Split.TEST)
        assert len(train) == 16
        assert test.split == Split.TEST
        assert not np.array_equal(train.images, test.images)

    def test_missing_manifest(self, tiny_config: ExperimentConfig, tmp_path: Path) -> None:
        """A manifest that does not exist is a configuration error."""
        with pytest.raises(ConfigError):
            experiment_dataset(tiny_config, Split.TRAIN, tmp_path / "absent.txt")
