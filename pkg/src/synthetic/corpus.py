"""Synthetic blur corpora for desk-scale end-to-end runs.

Each content is a stationary texture: Gaussian-filtered white noise with a
random mean level and contrast. Every content is rendered once per blur sigma,
so the distorted versions of one scene share a content_id.
"""
from dataclasses import replace
from pathlib import Path
from typing import Dict, Mapping, Sequence, Tuple, Union

import numpy as np
from loguru import logger
from scipy.ndimage import gaussian_filter

from src.aggregation.aggregators import AggregationKind, Structure, structure_vector
from src.dataset.manifest import DatasetManifest, ImageEntry, ScoreKind, write_manifest
from src.features.backend import FeatureSet
from src.features.image import RawImage, save_image

DEFAULT_SIGMAS = (0.0, 1.0, 2.0, 4.0)
SCORE_RANGE = (0.0, 5.0)
TEXTURE_SCALE = (1.0, 1.3)
LEVEL_RANGE = (70.0, 180.0)
CONTRAST_RANGE = (25.0, 45.0)


def blur_score(sigma: float) -> float:
    """Planted MOS on [0, 5]; 5 for a sharp image, strictly decreasing in sigma."""
    return SCORE_RANGE[1] / (1.0 + sigma)


def render_texture(rng: np.random.Generator, size: int) -> np.ndarray:
    """Float texture with a random level and contrast; not yet quantised."""
    scale = rng.uniform(*TEXTURE_SCALE)
    field = gaussian_filter(rng.standard_normal((size, size)), scale, mode="reflect")
    field /= field.std()
    return rng.uniform(*LEVEL_RANGE) + rng.uniform(*CONTRAST_RANGE) * field


def blur(texture: np.ndarray, sigma: float) -> np.ndarray:
    if sigma <= 0:
        return texture
    return gaussian_filter(texture, sigma, mode="reflect")


def generate_corpus(
    out_dir: Union[str, Path],
    n_contents: int = 50,
    sigmas: Sequence[float] = DEFAULT_SIGMAS,
    size: int = 64,
    seed: int = 0,
    name: str = "synthetic-blur",
) -> Path:
    """Write ``n_contents * len(sigmas)`` PGM images plus manifest.csv and its sidecar."""
    if n_contents < 1:
        raise ValueError(f"n_contents must be positive, got {n_contents}")
    if not sigmas or any(s < 0 for s in sigmas):
        raise ValueError(f"Blur sigmas must be non-negative, got {list(sigmas)}")
    if size < 2:
        raise ValueError(f"Image size must be at least 2, got {size}")

    out_dir = Path(out_dir)
    image_dir = out_dir / "images"
    rng = np.random.default_rng(seed)
    entries = []
    for c in range(n_contents):
        content_id = f"c{c:03d}"
        texture = render_texture(rng, size)
        for k, sigma in enumerate(sigmas):
            image_id = f"{content_id}_b{k}"
            relative = Path("images") / f"{image_id}.pgm"
            save_image(RawImage.from_array(blur(texture, sigma)), out_dir / relative)
            entries.append(ImageEntry(
                image_id=image_id,
                path=relative.as_posix(),
                score=blur_score(sigma),
                content_id=content_id,
            ))
        logger.debug(f"Rendered content {content_id} at {len(sigmas)} blur levels")

    manifest = DatasetManifest(name=name, score_kind=ScoreKind.MOS, score_range=SCORE_RANGE,
                               entries=entries, root=out_dir)
    manifest.validate()
    manifest_path = out_dir / "manifest.csv"
    write_manifest(manifest, manifest_path)
    logger.info(f"Wrote {len(entries)} synthetic images to {image_dir}")
    return manifest_path


def plant_linear_scores(
    features: Mapping[str, FeatureSet],
    structure: Structure = (AggregationKind.MEAN_STD,),
    snr_db: float = 20.0,
    seed: int = 0,
    score_range: Tuple[float, float] = SCORE_RANGE,
) -> Dict[str, float]:
    """Scores that are a fixed linear function of one aggregate plus Gaussian noise.

    The noise variance is var(signal) / 10^(snr_db / 10). The result is mapped
    affinely into the middle 80% of ``score_range``.
    """
    ids = list(features)
    X = np.vstack([structure_vector(features[i], structure) for i in ids])
    rng = np.random.default_rng(seed)
    signal = (X - X.mean(axis=0)) @ rng.standard_normal(X.shape[1])
    noise_std = np.sqrt(signal.var() / 10.0 ** (snr_db / 10.0))
    y = signal + rng.normal(0.0, noise_std, size=signal.shape)
    lo, hi = score_range
    span = np.ptp(y)
    if span == 0:
        y = np.full_like(y, (lo + hi) / 2.0)
    else:
        y = lo + 0.1 * (hi - lo) + 0.8 * (hi - lo) * (y - y.min()) / span
    return dict(zip(ids, y.tolist()))


def with_scores(manifest: DatasetManifest, scores: Mapping[str, float]) -> DatasetManifest:
    """Copy of ``manifest`` whose listed entries carry new scores."""
    entries = [replace(e, score=float(scores[e.image_id])) if e.image_id in scores else e
               for e in manifest.entries]
    updated = replace(manifest, entries=entries)
    updated.validate()
    return updated
