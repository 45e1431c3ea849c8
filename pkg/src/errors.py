"""Error types raised across the SFA-PLSR package."""
from typing import Optional


class SfaError(Exception):
    """Base class for every error raised by this package."""


# Dataset ingestion

class MissingFile(SfaError, FileNotFoundError):
    """A required input file does not exist."""


class ParseError(SfaError, ValueError):
    """A manifest or config file could not be parsed."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class ScoreOutOfRange(SfaError, ValueError):
    def __init__(self, image_id: str, score: float, score_range):
        self.image_id = image_id
        super().__init__(f"Score {score} of {image_id!r} outside range {tuple(score_range)}")


class DuplicateImageId(SfaError, ValueError):
    def __init__(self, image_id: str):
        self.image_id = image_id
        super().__init__(f"Duplicate image_id: {image_id!r}")


# Feature file container

class MagicMismatch(SfaError, ValueError):
    """File does not start with the feature-file magic bytes."""


class VersionUnsupported(SfaError, ValueError):
    """Feature-file version is not understood by this reader."""


class TruncatedPayload(SfaError, ValueError):
    """File ended before the declared header or payload was complete."""


class DimensionMismatch(SfaError, ValueError):
    """Vector or matrix dimensions disagree with what was declared or trained."""


# Layout and feature extraction

class ImageSmallerThanPatch(SfaError, ValueError):
    def __init__(self, axis: str, extent: int, patch_size: int):
        self.axis = axis
        super().__init__(f"Image {axis} {extent} is smaller than patch size {patch_size}")


class BackendUnavailable(SfaError, RuntimeError):
    """The requested feature backend is not configured or failed to start."""


class DimMismatch(SfaError, ValueError):
    """A backend emitted vectors whose width differs from the configured dim."""


# Aggregation

class EmptyFeatureSet(SfaError, ValueError):
    """Aggregation was asked to summarise zero patches."""


class NeedAtLeastTwoPatches(SfaError, ValueError):
    """Sample standard deviation needs n >= 2."""


# Regression and pipeline

class TooFewSamples(SfaError, ValueError):
    """Fewer training samples than the regression needs."""


class TooManyComponents(SfaError, ValueError):
    """Requested PLSR components exceed min(n_samples - 1, feature_dim)."""


class MissingFeatures(SfaError, KeyError):
    def __init__(self, image_id: str):
        self.image_id = image_id
        super().__init__(f"No features for image {image_id!r}")

    def __str__(self) -> str:
        return self.args[0]


# Evaluation

class LengthMismatch(SfaError, ValueError):
    """Paired score vectors have different or too-short lengths."""


class DegenerateInput(SfaError, ValueError):
    """Input makes the statistic undefined (constant vector, too few points)."""


class TooFewContents(SfaError, ValueError):
    """A split needs at least two distinct content groups."""


# CLI

class ConfigInvalid(SfaError, ValueError):
    """Run configuration failed validation."""


class UpstreamArtifactMissing(SfaError, FileNotFoundError):
    """A downstream command could not find the artifact an earlier step writes."""


# Warning statuses recorded on results instead of raised
STATUS_OK = "ok"
STATUS_DEGENERATE_TARGET = "degenerate_target"
STATUS_NON_CONVERGENCE = "non_convergence"
