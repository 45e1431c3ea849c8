"""Per-patch feature sets and the interchangeable backends that produce them."""
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np
from loguru import logger

from src.dataset.feature_file import FeatureFile, read_feature_file
from src.errors import BackendUnavailable, DimMismatch, EmptyFeatureSet
from src.features.external import ExternalModelAdapter
from src.features.image import RawImage, render_patch
from src.features.lowlevel import LOWLEVEL_DIM, builtin_lowlevel_features
from src.layout.patch_grid import (
    PatchGrid, PatchSpec, RepresentationMode, RepresentationPlan, plan_from_grid, represent,
)


class BackendKind(Enum):
    FROM_FILE = "from_file"
    BUILTIN_LOW_LEVEL = "builtin"
    EXTERNAL_MODEL = "external"


@dataclass(frozen=True)
class ExtractorConfig:
    backend: BackendKind = BackendKind.BUILTIN_LOW_LEVEL
    extractor_tag: str = "builtin-lowlevel-v1"
    layer_tag: str = "patch-stats"
    dim: int = LOWLEVEL_DIM
    patch_spec: PatchSpec = field(default_factory=PatchSpec)
    representation: RepresentationMode = RepresentationMode.MULTI_PATCH
    external_command: Tuple[str, ...] = ()

    def validate(self) -> None:
        if not self.extractor_tag or not self.layer_tag:
            raise ValueError("extractor_tag and layer_tag must be non-empty")
        if self.dim <= 0:
            raise ValueError(f"dim must be positive, got {self.dim}")
        if self.backend is BackendKind.BUILTIN_LOW_LEVEL and self.dim != LOWLEVEL_DIM:
            raise DimMismatch(f"Builtin backend emits {LOWLEVEL_DIM} values, config says {self.dim}")

    def to_dict(self) -> dict:
        return {
            "backend": self.backend.value,
            "extractor_tag": self.extractor_tag,
            "layer_tag": self.layer_tag,
            "dim": self.dim,
            "patch_spec": self.patch_spec.to_dict(),
            "representation": self.representation.value,
            "external_command": list(self.external_command),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ExtractorConfig":
        return cls(
            backend=BackendKind(data.get("backend", BackendKind.BUILTIN_LOW_LEVEL.value)),
            extractor_tag=data.get("extractor_tag", "builtin-lowlevel-v1"),
            layer_tag=data.get("layer_tag", "patch-stats"),
            dim=int(data.get("dim", LOWLEVEL_DIM)),
            patch_spec=PatchSpec.from_dict(data["patch_spec"]) if "patch_spec" in data else PatchSpec(),
            representation=RepresentationMode(data.get("representation", "multipatch")),
            external_command=tuple(data.get("external_command", ())),
        )


@dataclass(eq=False)
class FeatureSet:
    """n x l matrix of per-patch features for one image, rows in grid order."""
    image_id: str
    features: np.ndarray
    config: ExtractorConfig

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        if self.features.ndim == 2 and self.features.shape[0] == 0:
            raise EmptyFeatureSet(f"Feature set for {self.image_id!r} holds no patches")
        if self.features.ndim != 2 or self.features.shape[1] < 1:
            raise ValueError(f"Feature set for {self.image_id!r} must be a non-empty n x l matrix, "
                             f"got shape {self.features.shape}")
        if not np.all(np.isfinite(self.features)):
            raise ValueError(f"Feature set for {self.image_id!r} holds non-finite values")

    @property
    def n_patches(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def to_feature_file(self, provenance: Optional[dict] = None) -> FeatureFile:
        return FeatureFile(
            image_id=self.image_id,
            extractor_tag=self.config.extractor_tag,
            layer_tag=self.config.layer_tag,
            n_patches=self.n_patches,
            dim=self.dim,
            values=self.features.astype(np.float32),
            provenance=provenance,
        )


def _patch_row(patch: np.ndarray, cfg: ExtractorConfig,
               adapter: Optional[ExternalModelAdapter]) -> np.ndarray:
    if cfg.backend is BackendKind.BUILTIN_LOW_LEVEL:
        return builtin_lowlevel_features(patch)
    if cfg.backend is BackendKind.EXTERNAL_MODEL:
        if adapter is None:
            raise BackendUnavailable("ExternalModel backend selected but no adapter is configured")
        return adapter.features(patch, cfg.layer_tag)
    raise ValueError(f"Backend {cfg.backend.value!r} does not extract from pixels")


def extract_plan(image: RawImage, plan: RepresentationPlan, cfg: ExtractorConfig,
                 adapter: Optional[ExternalModelAdapter] = None,
                 image_id: str = "") -> FeatureSet:
    if plan.dims != image.dims:
        raise ValueError(f"Plan built for {plan.dims}, image is {image.dims}")
    rows = []
    for rect in plan.rects:
        row = np.asarray(_patch_row(render_patch(image, rect), cfg, adapter), dtype=np.float64)
        if row.shape != (cfg.dim,):
            raise DimMismatch(f"Backend {cfg.extractor_tag!r} emitted {row.size} values, expected {cfg.dim}")
        rows.append(row)
    return FeatureSet(image_id=image_id, features=np.vstack(rows), config=cfg)


def extract(image: RawImage, grid: PatchGrid, cfg: ExtractorConfig,
            adapter: Optional[ExternalModelAdapter] = None, image_id: str = "") -> FeatureSet:
    """One feature row per grid origin, in grid order."""
    return extract_plan(image, plan_from_grid(grid), cfg, adapter, image_id)


def from_file(path: Union[str, Path], patch_spec: Optional[PatchSpec] = None) -> FeatureSet:
    f = read_feature_file(path)
    cfg = ExtractorConfig(
        backend=BackendKind.FROM_FILE,
        extractor_tag=f.extractor_tag or "unknown",
        layer_tag=f.layer_tag or "unknown",
        dim=f.dim,
        patch_spec=patch_spec or PatchSpec(),
    )
    return FeatureSet(image_id=f.image_id, features=f.values.astype(np.float64), config=cfg)


class FeatureExtractor:
    """Binds an ExtractorConfig to its backend resources (e.g. a model process)."""

    def __init__(self, cfg: ExtractorConfig):
        cfg.validate()
        if cfg.backend is BackendKind.FROM_FILE:
            raise ValueError("FromFile features are read with from_file, not extracted")
        self.cfg = cfg
        self.adapter: Optional[ExternalModelAdapter] = None
        if cfg.backend is BackendKind.EXTERNAL_MODEL:
            self.adapter = ExternalModelAdapter(cfg.external_command)

    def plan(self, image: RawImage) -> RepresentationPlan:
        return represent(image.dims, self.cfg.representation, self.cfg.patch_spec)

    def extract_image(self, image_id: str, image: RawImage) -> FeatureSet:
        fs = extract_plan(image, self.plan(image), self.cfg, self.adapter, image_id)
        logger.debug(f"Extracted {fs.n_patches}x{fs.dim} features for {image_id}")
        return fs

    def close(self) -> None:
        if self.adapter is not None:
            self.adapter.close()

    def __enter__(self) -> "FeatureExtractor":
        return self

    def __exit__(self, *exc) -> None:
        self.close()
