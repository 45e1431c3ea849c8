"""Portable per-image feature container.

Layout (little-endian)::

    b"SFAF" | u32 version | u32 header_len | UTF-8 JSON header | float32 payload

The header carries image_id, extractor_tag, layer_tag, n_patches and dim (plus
``kind`` for aggregated vectors and ``provenance``, the config hash and seed of
the run that wrote the file). The payload is n_patches * dim float32 values,
patch-major.
"""
import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np

from src.errors import (
    DimensionMismatch, MagicMismatch, MissingFile, ParseError,
    TruncatedPayload, VersionUnsupported,
)

MAGIC = b"SFAF"
VERSION = 1
FEATURE_SUFFIX = ".sfaf"
_PREAMBLE = struct.Struct("<4sII")
_FLOAT = np.dtype("<f4")


@dataclass(eq=False)
class FeatureFile:
    image_id: str
    extractor_tag: str
    layer_tag: str
    n_patches: int
    dim: int
    values: np.ndarray
    kind: Optional[str] = None
    provenance: Optional[dict] = None

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=_FLOAT)
        if self.values.ndim == 1 and self.values.size == self.n_patches * self.dim:
            self.values = self.values.reshape(self.n_patches, self.dim)

    def validate(self) -> None:
        if self.n_patches <= 0:
            raise ValueError(f"n_patches must be positive, got {self.n_patches}")
        if self.dim <= 0:
            raise ValueError(f"dim must be positive, got {self.dim}")
        if self.values.shape != (self.n_patches, self.dim):
            raise DimensionMismatch(
                f"values shape {self.values.shape} != ({self.n_patches}, {self.dim})"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError(f"Feature file for {self.image_id!r} holds non-finite values")

    def header(self) -> dict:
        header = {
            "image_id": self.image_id,
            "extractor_tag": self.extractor_tag,
            "layer_tag": self.layer_tag,
            "n_patches": int(self.n_patches),
            "dim": int(self.dim),
        }
        if self.kind is not None:
            header["kind"] = self.kind
        if self.provenance is not None:
            header["provenance"] = dict(self.provenance)
        return header

    def __eq__(self, other) -> bool:
        if not isinstance(other, FeatureFile):
            return NotImplemented
        return (
            self.header() == other.header()
            and self.values.shape == other.values.shape
            and self.values.tobytes() == other.values.tobytes()
        )


def encode_feature_file(f: FeatureFile) -> bytes:
    f.validate()
    header = json.dumps(f.header(), sort_keys=True, separators=(",", ":")).encode("utf-8")
    payload = np.ascontiguousarray(f.values, dtype=_FLOAT).tobytes(order="C")
    return _PREAMBLE.pack(MAGIC, VERSION, len(header)) + header + payload


def decode_feature_file(blob: bytes) -> FeatureFile:
    if len(blob) < len(MAGIC):
        raise TruncatedPayload(f"Only {len(blob)} bytes; expected a feature file")
    if blob[:len(MAGIC)] != MAGIC:
        raise MagicMismatch(f"Bad magic {blob[:len(MAGIC)]!r}, expected {MAGIC!r}")
    if len(blob) < _PREAMBLE.size:
        raise TruncatedPayload("File ends inside the preamble")
    _, version, header_len = _PREAMBLE.unpack_from(blob)
    if version != VERSION:
        raise VersionUnsupported(f"Feature file version {version} is not supported")

    header_end = _PREAMBLE.size + header_len
    if len(blob) < header_end:
        raise TruncatedPayload(f"File ends inside the {header_len}-byte header")
    try:
        header = json.loads(blob[_PREAMBLE.size:header_end].decode("utf-8"))
        n_patches = int(header["n_patches"])
        dim = int(header["dim"])
    except (UnicodeDecodeError, json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
        raise ParseError(f"Invalid feature file header: {e}")
    if n_patches <= 0 or dim <= 0:
        raise DimensionMismatch(f"Header declares n_patches={n_patches}, dim={dim}")

    payload = blob[header_end:]
    expected = n_patches * dim
    if len(payload) % _FLOAT.itemsize:
        raise TruncatedPayload(f"Payload of {len(payload)} bytes is not whole float32 values")
    count = len(payload) // _FLOAT.itemsize
    if count != expected:
        # Whole rows of the wrong width are a dimension error; anything else is truncation.
        if count > 0 and count % n_patches == 0:
            raise DimensionMismatch(
                f"Header dim {dim} but payload implies {count // n_patches} per patch"
            )
        if count < expected:
            raise TruncatedPayload(f"Payload holds {count} of {expected} values")
        raise DimensionMismatch(f"Payload holds {count} values, header declares {expected}")

    values = np.frombuffer(payload, dtype=_FLOAT).reshape(n_patches, dim).copy()
    if not np.all(np.isfinite(values)):
        raise ParseError(f"Feature file for {header.get('image_id')!r} holds non-finite values")
    return FeatureFile(
        image_id=str(header["image_id"]),
        extractor_tag=str(header.get("extractor_tag", "")),
        layer_tag=str(header.get("layer_tag", "")),
        n_patches=n_patches,
        dim=dim,
        values=values,
        kind=header.get("kind"),
        provenance=header.get("provenance"),
    )


def write_feature_file(f: FeatureFile, path: Union[str, Path]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    blob = encode_feature_file(f)
    with open(path, "wb") as out:
        out.write(blob)


def read_feature_file(path: Union[str, Path]) -> FeatureFile:
    path = Path(path)
    if not path.exists():
        raise MissingFile(f"Feature file not found: {path}")
    with open(path, "rb") as f:
        return decode_feature_file(f.read())


def feature_path(features_dir: Union[str, Path], image_id: str) -> Path:
    return Path(features_dir) / f"{image_id}{FEATURE_SUFFIX}"
