"""Decoded images and patch rendering."""
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np
from PIL import Image

from src.errors import MissingFile
from src.layout.patch_grid import ImageDims, SourceRect

REC601 = np.array([0.299, 0.587, 0.114])
_GRAY_MODES = {"1", "L", "LA", "I", "I;16", "F"}


@dataclass(eq=False)
class RawImage:
    """8-bit image, pixels shaped (height, width, channels)."""
    width: int
    height: int
    channels: int
    pixels: np.ndarray

    def __post_init__(self):
        if self.channels not in (1, 3):
            raise ValueError(f"Images must have 1 or 3 channels, got {self.channels}")
        if self.pixels.size != self.width * self.height * self.channels:
            raise ValueError(
                f"Pixel buffer holds {self.pixels.size} samples, "
                f"expected {self.width}x{self.height}x{self.channels}"
            )
        self.pixels = np.ascontiguousarray(self.pixels, dtype=np.uint8).reshape(
            self.height, self.width, self.channels
        )

    @property
    def dims(self) -> ImageDims:
        return ImageDims(self.width, self.height)

    @classmethod
    def from_array(cls, array: np.ndarray) -> "RawImage":
        array = np.asarray(array)
        if array.ndim == 2:
            array = array[:, :, np.newaxis]
        if array.ndim != 3:
            raise ValueError(f"Expected a 2-D or 3-D pixel array, got shape {array.shape}")
        height, width, channels = array.shape
        return cls(width=width, height=height, channels=channels,
                   pixels=np.clip(np.rint(array), 0, 255).astype(np.uint8))


def load_image(path: Union[str, Path]) -> RawImage:
    """Decode PGM/PPM (or anything Pillow reads) into an 8-bit gray or RGB image."""
    path = Path(path)
    if not path.exists():
        raise MissingFile(f"Image not found: {path}")
    with Image.open(path) as img:
        img = img.convert("L" if img.mode in _GRAY_MODES else "RGB")
        return RawImage.from_array(np.asarray(img))


def save_image(image: RawImage, path: Union[str, Path]) -> None:
    """Write PGM for gray images and PPM for colour ones when the suffix asks for it."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    array = image.pixels[:, :, 0] if image.channels == 1 else image.pixels
    Image.fromarray(array).save(path)


def to_luminance(pixels: np.ndarray) -> np.ndarray:
    """Float64 luminance plane; 3-channel input uses Rec. 601 weights."""
    pixels = np.asarray(pixels, dtype=np.float64)
    if pixels.ndim == 2:
        return pixels
    if pixels.shape[2] == 1:
        return pixels[:, :, 0]
    return pixels @ REC601


def render_patch(image: RawImage, rect: SourceRect) -> np.ndarray:
    """Pixels of one plan rectangle after optional bilinear resampling and zero padding."""
    block = image.pixels[rect.y:rect.y + rect.height, rect.x:rect.x + rect.width]
    if rect.needs_resampling:
        plane = block[:, :, 0] if image.channels == 1 else block
        resized = Image.fromarray(plane).resize(rect.resample_to, Image.Resampling.BILINEAR)
        block = np.asarray(resized).reshape(rect.resample_to[1], rect.resample_to[0], image.channels)
    if rect.canvas is not None:
        canvas = np.zeros((rect.canvas[1], rect.canvas[0], image.channels), dtype=np.uint8)
        canvas[:block.shape[0], :block.shape[1]] = block
        block = canvas
    return block
