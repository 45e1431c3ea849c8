"""Patch layouts: the overlapping multi-patch grid and the crop/scale/pad alternatives."""
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Tuple

from src.errors import ImageSmallerThanPatch

DEFAULT_PATCH_SIZE = 224


class RepresentationMode(Enum):
    MULTI_PATCH = "multipatch"
    CROP = "crop"
    SCALE = "scale"
    PAD = "pad"


@dataclass(frozen=True)
class ImageDims:
    width: int
    height: int

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError(f"Image dimensions must be positive, got {self.width}x{self.height}")


@dataclass(frozen=True)
class PatchSpec:
    patch_size: int = DEFAULT_PATCH_SIZE
    stride: Optional[int] = None

    def __post_init__(self):
        if self.patch_size < 1:
            raise ValueError(f"Patch size must be positive, got {self.patch_size}")
        if self.stride is None:
            object.__setattr__(self, "stride", max(1, self.patch_size // 2))
        if not 1 <= self.stride <= self.patch_size:
            raise ValueError(f"Stride must lie in [1, {self.patch_size}], got {self.stride}")

    def to_dict(self) -> dict:
        return {"patch_size": self.patch_size, "stride": self.stride}

    @classmethod
    def from_dict(cls, data: dict) -> "PatchSpec":
        return cls(patch_size=int(data["patch_size"]), stride=data.get("stride"))


@dataclass(frozen=True)
class PatchGrid:
    dims: ImageDims
    spec: PatchSpec
    origins: List[Tuple[int, int]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.origins)

    def to_dict(self) -> dict:
        return {
            "dims": {"width": self.dims.width, "height": self.dims.height},
            "spec": self.spec.to_dict(),
            "n_patches": len(self.origins),
            "origins": [list(o) for o in self.origins],
        }


def axis_origins(extent: int, patch_size: int, stride: int) -> List[int]:
    """0, stride, 2*stride, ... plus a final origin clamped to extent - patch_size."""
    last = extent - patch_size
    origins = list(range(0, last + 1, stride))
    if origins[-1] != last:
        origins.append(last)
    return origins


def axis_count(extent: int, spec: PatchSpec) -> int:
    return len(axis_origins(extent, spec.patch_size, spec.stride))


def _check_fits(dims: ImageDims, spec: PatchSpec) -> None:
    if dims.width < spec.patch_size:
        raise ImageSmallerThanPatch("width", dims.width, spec.patch_size)
    if dims.height < spec.patch_size:
        raise ImageSmallerThanPatch("height", dims.height, spec.patch_size)


def compute_grid(dims: ImageDims, spec: PatchSpec) -> PatchGrid:
    """Row-major grid of overlapping patch origins covering every pixel."""
    _check_fits(dims, spec)
    xs = axis_origins(dims.width, spec.patch_size, spec.stride)
    ys = axis_origins(dims.height, spec.patch_size, spec.stride)
    return PatchGrid(dims=dims, spec=spec, origins=[(x, y) for y in ys for x in xs])


@dataclass(frozen=True)
class SourceRect:
    """A source rectangle, optionally resampled to ``resample_to`` (w, h) and
    placed at the top-left of a zero-filled ``canvas`` (w, h)."""
    x: int
    y: int
    width: int
    height: int
    resample_to: Optional[Tuple[int, int]] = None
    canvas: Optional[Tuple[int, int]] = None
    resample_filter: str = "bilinear"

    @property
    def needs_resampling(self) -> bool:
        return self.resample_to is not None and self.resample_to != (self.width, self.height)

    def to_dict(self) -> dict:
        return {
            "x": self.x, "y": self.y, "width": self.width, "height": self.height,
            "resample_to": list(self.resample_to) if self.resample_to else None,
            "canvas": list(self.canvas) if self.canvas else None,
            "resample_filter": self.resample_filter,
        }


@dataclass(frozen=True)
class RepresentationPlan:
    mode: RepresentationMode
    dims: ImageDims
    spec: PatchSpec
    rects: List[SourceRect] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.rects)

    def to_dict(self) -> dict:
        return {
            "mode": self.mode.value,
            "dims": {"width": self.dims.width, "height": self.dims.height},
            "spec": self.spec.to_dict(),
            "rects": [r.to_dict() for r in self.rects],
        }


def plan_from_grid(grid: PatchGrid) -> RepresentationPlan:
    p = grid.spec.patch_size
    return RepresentationPlan(
        mode=RepresentationMode.MULTI_PATCH,
        dims=grid.dims,
        spec=grid.spec,
        rects=[SourceRect(x, y, p, p) for x, y in grid.origins],
    )


def represent(dims: ImageDims, mode: RepresentationMode, spec: PatchSpec) -> RepresentationPlan:
    p = spec.patch_size
    if mode is RepresentationMode.MULTI_PATCH:
        return plan_from_grid(compute_grid(dims, spec))

    if mode is RepresentationMode.CROP:
        _check_fits(dims, spec)
        rect = SourceRect((dims.width - p) // 2, (dims.height - p) // 2, p, p)
    elif mode is RepresentationMode.SCALE:
        rect = SourceRect(0, 0, dims.width, dims.height, resample_to=(p, p))
    elif mode is RepresentationMode.PAD:
        # Larger side goes to p, the other keeps the aspect ratio; zeros fill the rest.
        if dims.width >= dims.height:
            target = (p, max(1, round(dims.height * p / dims.width)))
        else:
            target = (max(1, round(dims.width * p / dims.height)), p)
        rect = SourceRect(0, 0, dims.width, dims.height, resample_to=target, canvas=(p, p))
    else:
        raise ValueError(f"Unknown representation mode: {mode}")
    return RepresentationPlan(mode=mode, dims=dims, spec=spec, rects=[rect])
