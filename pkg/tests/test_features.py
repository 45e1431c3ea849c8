"""Tests for image decoding, patch rendering and the builtin feature backend."""
import numpy as np
import pytest
from scipy.ndimage import gaussian_filter

from src.errors import DimMismatch, EmptyFeatureSet
from src.features.backend import (
    BackendKind, ExtractorConfig, FeatureExtractor, FeatureSet, extract, from_file,
)
from src.features.image import RawImage, load_image, render_patch, save_image, to_luminance
from src.features.lowlevel import LOWLEVEL_DIM, LOWLEVEL_NAMES, builtin_lowlevel_features
from src.dataset.feature_file import write_feature_file
from src.layout.patch_grid import (
    PatchSpec, RepresentationMode, SourceRect, compute_grid,
)

GRADIENT_ENERGY = LOWLEVEL_NAMES.index("gradient_energy")


@pytest.fixture
def texture():
    """64x64 gray texture."""
    rng = np.random.default_rng(3)
    return RawImage.from_array(128 + 40 * rng.standard_normal((64, 64)))


def test_pgm_round_trip(tmp_path, texture):
    """Test saving and loading a PGM."""
    save_image(texture, tmp_path / "t.pgm")
    loaded = load_image(tmp_path / "t.pgm")

    assert (loaded.width, loaded.height, loaded.channels) == (64, 64, 1)
    assert np.array_equal(loaded.pixels, texture.pixels)


def test_rgb_luminance():
    """Colour images use Rec. 601 weights."""
    pixels = np.zeros((2, 2, 3))
    pixels[..., 0] = 100
    pixels[..., 1] = 200

    assert np.allclose(to_luminance(pixels), 0.299 * 100 + 0.587 * 200)


def test_raw_image_validation():
    """Buffer length and channel count are checked."""
    with pytest.raises(ValueError):
        RawImage(width=2, height=2, channels=3, pixels=np.zeros(11, dtype=np.uint8))
    with pytest.raises(ValueError):
        RawImage(width=2, height=2, channels=2, pixels=np.zeros(8, dtype=np.uint8))


def test_render_pad_fills_zeros():
    """A padded rectangle lands top-left on a zero canvas."""
    image = RawImage.from_array(np.full((20, 40), 200.0))
    patch = render_patch(image, SourceRect(0, 0, 40, 20, resample_to=(16, 8), canvas=(16, 16)))

    assert patch.shape == (16, 16, 1)
    assert np.all(patch[:8] == 200)
    assert np.all(patch[8:] == 0)


def test_lowlevel_layout():
    """Constant patches map to [value, 0, ..., 0]."""
    features = builtin_lowlevel_features(np.full((16, 16), 90.0))

    assert features.shape == (LOWLEVEL_DIM,)
    assert features[0] == 90.0
    assert np.all(features[1:] == 0)

    rng = np.random.default_rng(0)
    noisy = builtin_lowlevel_features(rng.uniform(0, 255, (16, 16)))
    assert noisy[6:].sum() == pytest.approx(1.0)

    with pytest.raises(ValueError):
        builtin_lowlevel_features(np.zeros((4, 5)))


def test_gradient_energy_falls_with_blur():
    """Gradient energy strictly decreases for sigma 0, 1, 2, 4 on an edge."""
    edge = np.zeros((32, 32))
    edge[:, 16:] = 255.0
    energies = [
        builtin_lowlevel_features(gaussian_filter(edge, s, mode="nearest") if s else edge)[GRADIENT_ENERGY]
        for s in (0, 1, 2, 4)
    ]

    assert all(a > b for a, b in zip(energies, energies[1:]))


def test_builtin_extraction(texture):
    """One row per grid origin, in grid order."""
    spec = PatchSpec(32, 16)
    cfg = ExtractorConfig(patch_spec=spec)
    grid = compute_grid(texture.dims, spec)
    fs = extract(texture, grid, cfg, image_id="t")

    assert (fs.n_patches, fs.dim) == (9, LOWLEVEL_DIM)
    x, y = grid.origins[4]
    assert np.allclose(fs.features[4], builtin_lowlevel_features(texture.pixels[y:y + 32, x:x + 32]))


def test_feature_extractor_representations(texture):
    """Single-patch representations yield one row."""
    for mode in (RepresentationMode.CROP, RepresentationMode.SCALE, RepresentationMode.PAD):
        cfg = ExtractorConfig(patch_spec=PatchSpec(32), representation=mode)
        with FeatureExtractor(cfg) as extractor:
            assert extractor.extract_image("t", texture).n_patches == 1

    with FeatureExtractor(ExtractorConfig(patch_spec=PatchSpec(32))) as extractor:
        assert extractor.extract_image("t", texture).n_patches == 9


def test_from_file(tmp_path, texture):
    """Features written to disk come back as float32-exact values."""
    fs = extract(texture, compute_grid(texture.dims, PatchSpec(32)),
                 ExtractorConfig(patch_spec=PatchSpec(32)), image_id="t")
    write_feature_file(fs.to_feature_file(), tmp_path / "t.sfaf")
    loaded = from_file(tmp_path / "t.sfaf", PatchSpec(32))

    assert loaded.image_id == "t"
    assert loaded.config.backend is BackendKind.FROM_FILE
    assert loaded.config.extractor_tag == "builtin-lowlevel-v1"
    assert np.array_equal(loaded.features, fs.features.astype(np.float32).astype(np.float64))


def test_config_validation():
    """The builtin backend has a fixed width."""
    with pytest.raises(DimMismatch):
        ExtractorConfig(dim=8).validate()
    with pytest.raises(EmptyFeatureSet):
        FeatureSet("empty", np.zeros((0, 3)), ExtractorConfig())
    with pytest.raises(ValueError):
        FeatureSet("nan", np.array([[1.0, np.inf]]), ExtractorConfig())


def test_extractor_config_round_trip():
    """Configs survive to_dict/from_dict."""
    cfg = ExtractorConfig(patch_spec=PatchSpec(64, 16), representation=RepresentationMode.PAD)

    assert ExtractorConfig.from_dict(cfg.to_dict()) == cfg
