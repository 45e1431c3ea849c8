"""Tests for patch layouts and alternative representations."""
import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from src.errors import ImageSmallerThanPatch
from src.layout.patch_grid import (
    ImageDims, PatchSpec, RepresentationMode, axis_count, axis_origins, compute_grid, represent,
)


def test_default_stride_is_half_the_patch():
    """Test the default stride."""
    assert PatchSpec().patch_size == 224
    assert PatchSpec().stride == 112
    assert PatchSpec(patch_size=31).stride == 15
    assert PatchSpec(patch_size=1).stride == 1

    with pytest.raises(ValueError):
        PatchSpec(patch_size=32, stride=33)
    with pytest.raises(ValueError):
        ImageDims(0, 10)


def test_exact_tiling():
    """448x448 with 224/112 gives three origins per axis."""
    grid = compute_grid(ImageDims(448, 448), PatchSpec(224, 112))

    assert axis_origins(448, 224, 112) == [0, 112, 224]
    assert len(grid) == 9
    assert grid.origins[:3] == [(0, 0), (112, 0), (224, 0)]


def test_final_origin_is_clamped():
    """The last window is pulled back to the image border."""
    grid = compute_grid(ImageDims(500, 224), PatchSpec(224, 112))

    assert [x for x, _ in grid.origins] == [0, 112, 224, 276]
    assert len(grid) == 4


def test_bid_sized_image():
    """1280x960 at 224/112 gives 11 x 8 patches."""
    dims = ImageDims(1280, 960)
    spec = PatchSpec(224, 112)

    assert axis_count(1280, spec) == 11
    assert axis_count(960, spec) == 8
    assert len(compute_grid(dims, spec)) == 88


def test_image_smaller_than_patch():
    """Test the axis named by the error."""
    with pytest.raises(ImageSmallerThanPatch) as excinfo:
        compute_grid(ImageDims(200, 300), PatchSpec(224))
    assert excinfo.value.axis == "width"

    with pytest.raises(ImageSmallerThanPatch) as excinfo:
        compute_grid(ImageDims(300, 200), PatchSpec(224))
    assert excinfo.value.axis == "height"


@settings(max_examples=200, deadline=None)
@given(
    width=st.integers(1, 120),
    height=st.integers(1, 120),
    patch=st.integers(1, 40),
    stride_fraction=st.floats(0.01, 1.0),
)
def test_grid_properties(width, height, patch, stride_fraction):
    """Coverage, bounds, ordering and the n = nx * ny count."""
    assume(width >= patch and height >= patch)
    spec = PatchSpec(patch, max(1, int(patch * stride_fraction)))
    dims = ImageDims(width, height)
    grid = compute_grid(dims, spec)

    assert grid == compute_grid(dims, spec)
    assert len(grid) == axis_count(width, spec) * axis_count(height, spec)
    assert len(set(grid.origins)) == len(grid.origins)
    assert grid.origins == sorted(grid.origins, key=lambda o: (o[1], o[0]))
    coverage = np.zeros((height, width), dtype=int)
    for x, y in grid.origins:
        assert 0 <= x <= width - patch and 0 <= y <= height - patch
        coverage[y:y + patch, x:x + patch] += 1
    assert coverage.min() >= 1
    if spec.stride == patch // 2 and patch % 2 == 0:
        assert coverage[patch:-patch, patch:-patch].max(initial=0) <= 4


def test_crop_is_centred():
    """Crop takes the central patch."""
    plan = represent(ImageDims(448, 448), RepresentationMode.CROP, PatchSpec(224))

    assert len(plan) == 1
    rect = plan.rects[0]
    assert (rect.x, rect.y, rect.width, rect.height) == (112, 112, 224, 224)
    assert not rect.needs_resampling


def test_scale_ignores_aspect_ratio():
    """Scale maps the whole image onto one square patch."""
    rect = represent(ImageDims(640, 480), RepresentationMode.SCALE, PatchSpec(224)).rects[0]

    assert (rect.x, rect.y, rect.width, rect.height) == (0, 0, 640, 480)
    assert rect.resample_to == (224, 224)
    assert rect.canvas is None


def test_pad_keeps_aspect_ratio():
    """448x224 is resampled to 224x112 and padded with 112 zero rows."""
    rect = represent(ImageDims(448, 224), RepresentationMode.PAD, PatchSpec(224)).rects[0]

    assert rect.resample_to == (224, 112)
    assert rect.canvas == (224, 224)

    tall = represent(ImageDims(100, 400), RepresentationMode.PAD, PatchSpec(224)).rects[0]
    assert tall.resample_to == (56, 224)


def test_multipatch_delegates_to_grid():
    """MultiPatch gives the grid's rectangles without resampling."""
    dims, spec = ImageDims(448, 448), PatchSpec(224)
    plan = represent(dims, RepresentationMode.MULTI_PATCH, spec)

    assert [(r.x, r.y) for r in plan.rects] == compute_grid(dims, spec).origins
    assert not any(r.needs_resampling for r in plan.rects)
