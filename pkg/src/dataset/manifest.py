"""Dataset manifests: images, subjective scores and content groupings."""
import json
import math
from collections import OrderedDict
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import pandas as pd
import yaml
from loguru import logger

from src.errors import (
    DuplicateImageId, MissingFile, ParseError, ScoreOutOfRange,
)

REQUIRED_COLUMNS = ("image_id", "path", "score")
OPTIONAL_COLUMNS = ("content_id", "excluded")
SIDECAR_SUFFIXES = (".json", ".yaml", ".yml")

_TRUE = {"1", "true", "yes", "y", "t"}
_FALSE = {"", "0", "false", "no", "n", "f"}


class ScoreKind(Enum):
    """Direction of the subjective score. DMOS: higher means worse."""
    MOS = "MOS"
    DMOS = "DMOS"


@dataclass(frozen=True)
class ImageEntry:
    image_id: str
    path: str
    score: float
    content_id: str
    excluded: bool = False

    def validate(self) -> None:
        if not self.image_id:
            raise ValueError("image_id must be non-empty")
        if not self.path:
            raise ValueError(f"Entry {self.image_id!r} has an empty path")
        if not self.content_id:
            raise ValueError(f"Entry {self.image_id!r} has an empty content_id")


@dataclass(frozen=True)
class DatasetManifest:
    name: str
    score_kind: ScoreKind
    score_range: Tuple[float, float]
    entries: List[ImageEntry] = field(default_factory=list)
    root: Optional[Path] = None

    def validate(self) -> None:
        lo, hi = self.score_range
        if not lo < hi:
            raise ValueError(f"Score range must satisfy lo < hi, got {self.score_range}")
        seen = set()
        for entry in self.entries:
            entry.validate()
            if entry.image_id in seen:
                raise DuplicateImageId(entry.image_id)
            seen.add(entry.image_id)
            if not (math.isfinite(entry.score) and lo <= entry.score <= hi):
                raise ScoreOutOfRange(entry.image_id, entry.score, self.score_range)

    def __len__(self) -> int:
        return len(self.entries)

    def active_entries(self) -> List[ImageEntry]:
        """Entries not flagged as excluded, in manifest order."""
        return [e for e in self.entries if not e.excluded]

    def content_groups(self, include_excluded: bool = False) -> "OrderedDict[str, List[ImageEntry]]":
        """Partition entries by content_id, preserving first-appearance order."""
        groups: "OrderedDict[str, List[ImageEntry]]" = OrderedDict()
        source = self.entries if include_excluded else self.active_entries()
        for entry in source:
            groups.setdefault(entry.content_id, []).append(entry)
        return groups

    def scores(self) -> Dict[str, float]:
        return {e.image_id: e.score for e in self.active_entries()}

    def entry(self, image_id: str) -> ImageEntry:
        for e in self.entries:
            if e.image_id == image_id:
                return e
        raise KeyError(image_id)

    def resolve(self, entry: ImageEntry) -> Path:
        """Absolute image path; relative paths resolve against the manifest directory."""
        path = Path(entry.path)
        if path.is_absolute() or self.root is None:
            return path
        return self.root / path


@dataclass(frozen=True)
class DatasetMetadata:
    name: str
    score_kind: ScoreKind
    score_range: Tuple[float, float]

    @classmethod
    def from_dict(cls, data: dict) -> "DatasetMetadata":
        try:
            lo, hi = data["score_range"]
            return cls(
                name=str(data["name"]),
                score_kind=ScoreKind(str(data.get("score_kind", "MOS")).upper()),
                score_range=(float(lo), float(hi)),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise ParseError(f"Invalid dataset metadata: {e}")


def _parse_bool(value: str, line: int) -> bool:
    token = value.strip().lower()
    if token in _TRUE:
        return True
    if token in _FALSE:
        return False
    raise ParseError(f"cannot read excluded flag {value!r}", line=line)


def find_sidecar(csv_path: Path) -> Optional[Path]:
    for suffix in SIDECAR_SUFFIXES:
        candidate = csv_path.with_suffix(suffix)
        if candidate.exists():
            return candidate
    return None


def load_metadata(path: Union[str, Path]) -> DatasetMetadata:
    path = Path(path)
    if not path.exists():
        raise MissingFile(f"Dataset metadata not found: {path}")
    with open(path, "r") as f:
        try:
            data = yaml.safe_load(f)
        except yaml.YAMLError as e:
            raise ParseError(f"Invalid metadata file {path}: {e}")
    if not isinstance(data, dict):
        raise ParseError(f"Metadata file {path} must hold a mapping")
    return DatasetMetadata.from_dict(data)


def load_manifest(
    path: Union[str, Path],
    metadata: Optional[DatasetMetadata] = None,
) -> DatasetManifest:
    """Load and validate a CSV manifest.

    Header: ``image_id,path,score[,content_id][,excluded]``. Dataset-level metadata
    comes from ``metadata`` or, failing that, a sidecar ``<stem>.json|.yaml`` next to
    the CSV. A missing content_id column means every image is its own content.
    Invalid rows reject the whole manifest.
    """
    path = Path(path)
    if not path.exists():
        raise MissingFile(f"Manifest not found: {path}")

    if metadata is None:
        sidecar = find_sidecar(path)
        if sidecar is None:
            raise MissingFile(f"No metadata sidecar next to {path} and none supplied")
        metadata = load_metadata(sidecar)

    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    except pd.errors.EmptyDataError:
        raise ParseError("manifest is empty", line=1)
    except pd.errors.ParserError as e:
        raise ParseError(str(e))

    frame.columns = [c.strip() for c in frame.columns]
    missing = [c for c in REQUIRED_COLUMNS if c not in frame.columns]
    if missing:
        raise ParseError(f"missing column(s) {missing} in header", line=1)
    unknown = [c for c in frame.columns if c not in REQUIRED_COLUMNS + OPTIONAL_COLUMNS]
    if unknown:
        raise ParseError(f"unknown column(s) {unknown} in header", line=1)

    entries: List[ImageEntry] = []
    for offset, row in enumerate(frame.itertuples(index=False)):
        line = offset + 2
        record = row._asdict()
        image_id = record["image_id"].strip()
        try:
            score = float(record["score"])
        except ValueError:
            raise ParseError(f"score {record['score']!r} is not a number", line=line)
        content_id = record.get("content_id", "").strip() if "content_id" in record else image_id
        excluded = _parse_bool(record["excluded"], line) if "excluded" in record else False
        entry = ImageEntry(
            image_id=image_id,
            path=record["path"].strip(),
            score=score,
            content_id=content_id,
            excluded=excluded,
        )
        try:
            entry.validate()
        except ValueError as e:
            raise ParseError(str(e), line=line)
        entries.append(entry)

    manifest = DatasetManifest(
        name=metadata.name,
        score_kind=metadata.score_kind,
        score_range=metadata.score_range,
        entries=entries,
        root=path.parent,
    )
    manifest.validate()
    logger.debug(
        f"Loaded manifest {manifest.name}: {len(entries)} entries, "
        f"{len(manifest.content_groups(include_excluded=True))} content groups"
    )
    return manifest


def load_exclusions(path: Union[str, Path]) -> List[str]:
    """Read an exclusion list: one image_id per line, '#' comments allowed."""
    path = Path(path)
    if not path.exists():
        raise MissingFile(f"Exclusion file not found: {path}")
    ids = []
    with open(path, "r") as f:
        for raw in f:
            token = raw.split("#", 1)[0].strip()
            if token:
                ids.append(token)
    return ids


def apply_exclusions(manifest: DatasetManifest, image_ids: List[str]) -> DatasetManifest:
    """Return a copy of the manifest with the listed images flagged as excluded."""
    wanted = set(image_ids)
    unknown = wanted - {e.image_id for e in manifest.entries}
    if unknown:
        logger.warning(f"{len(unknown)} excluded id(s) not present in {manifest.name}")
    entries = [replace(e, excluded=True) if e.image_id in wanted else e for e in manifest.entries]
    logger.info(f"Excluded {sum(e.excluded for e in entries)} of {len(entries)} images from {manifest.name}")
    return replace(manifest, entries=entries)


def write_manifest(manifest: DatasetManifest, path: Union[str, Path]) -> None:
    """Write the CSV and its JSON sidecar."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame([{
        "image_id": e.image_id,
        "path": e.path,
        "score": repr(float(e.score)),
        "content_id": e.content_id,
        "excluded": "true" if e.excluded else "false",
    } for e in manifest.entries], columns=list(REQUIRED_COLUMNS + OPTIONAL_COLUMNS))
    frame.to_csv(path, index=False)
    with open(path.with_suffix(".json"), "w") as f:
        json.dump({
            "name": manifest.name,
            "score_kind": manifest.score_kind.value,
            "score_range": [float(manifest.score_range[0]), float(manifest.score_range[1])],
        }, f, indent=2)
