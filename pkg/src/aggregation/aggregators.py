"""Statistical aggregation of per-patch features into fixed-length image vectors.

All column statistics are two-pass (mean first, then centred sums) so wide
feature sets with many patches do not lose precision.
"""
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Dict, Sequence, Tuple

import numpy as np

from src.errors import EmptyFeatureSet, NeedAtLeastTwoPatches
from src.features.backend import FeatureSet

QUARTILES = (0.0, 0.25, 0.5, 0.75, 1.0)
MOMENT_ORDERS = (2, 3, 4)


class AggregationKind(Enum):
    MEAN = "mean"
    MEAN_STD = "mean_std"
    QUANTILE = "quantile"
    MOMENT = "moment"
    CONCAT = "concat"


@dataclass(eq=False)
class AggregatedFeature:
    kind: AggregationKind
    values: np.ndarray
    source_dim: int
    n_patches: int

    def __len__(self) -> int:
        return self.values.shape[0]


def _matrix(fs: FeatureSet) -> np.ndarray:
    d = np.asarray(fs.features, dtype=np.float64)
    if d.ndim != 2 or d.shape[0] == 0:
        raise EmptyFeatureSet(f"Feature set {fs.image_id!r} holds no patches")
    return d


def _column_mean(d: np.ndarray) -> np.ndarray:
    return d.sum(axis=0) / d.shape[0]


def _pack(kind: AggregationKind, d: np.ndarray, *blocks: np.ndarray) -> AggregatedFeature:
    return AggregatedFeature(kind=kind, values=np.concatenate(blocks),
                             source_dim=d.shape[1], n_patches=d.shape[0])


def signed_root(m: np.ndarray, k: int) -> np.ndarray:
    """Real k-th root keeping the sign for odd k."""
    if k == 2:
        return np.sqrt(m)
    if k == 3:
        return np.cbrt(m)
    return np.sign(m) * np.abs(m) ** (1.0 / k)


def agg_mean(fs: FeatureSet) -> AggregatedFeature:
    d = _matrix(fs)
    return _pack(AggregationKind.MEAN, d, _column_mean(d))


def agg_mean_std(fs: FeatureSet) -> AggregatedFeature:
    """Mean block followed by the sample standard deviation (divisor n - 1)."""
    d = _matrix(fs)
    n = d.shape[0]
    if n < 2:
        raise NeedAtLeastTwoPatches(f"Mean&std aggregation of {fs.image_id!r} needs >= 2 patches, got {n}")
    mean = _column_mean(d)
    centred = d - mean
    std = np.sqrt((centred * centred).sum(axis=0) / (n - 1))
    return _pack(AggregationKind.MEAN_STD, d, mean, std)


def agg_quantile(fs: FeatureSet) -> AggregatedFeature:
    """Quartiles q0..q4 per column; q0/q2/q4 are exactly min/median/max."""
    d = _matrix(fs)
    q = np.quantile(d, QUARTILES, axis=0, method="linear")
    return _pack(AggregationKind.QUANTILE, d, *q)


def agg_moment(fs: FeatureSet) -> AggregatedFeature:
    """Mean block followed by signed k-th roots of central moments k = 2, 3, 4 (divisor n)."""
    d = _matrix(fs)
    n = d.shape[0]
    mean = _column_mean(d)
    centred = d - mean
    roots = [signed_root((centred ** k).sum(axis=0) / n, k) for k in MOMENT_ORDERS]
    return _pack(AggregationKind.MOMENT, d, mean, *roots)


def agg_concat(fs: FeatureSet) -> AggregatedFeature:
    d = _matrix(fs)
    return _pack(AggregationKind.CONCAT, d, d.reshape(-1))


AGGREGATORS: Dict[AggregationKind, Callable[[FeatureSet], AggregatedFeature]] = {
    AggregationKind.MEAN: agg_mean,
    AggregationKind.MEAN_STD: agg_mean_std,
    AggregationKind.QUANTILE: agg_quantile,
    AggregationKind.MOMENT: agg_moment,
    AggregationKind.CONCAT: agg_concat,
}


def aggregate(fs: FeatureSet, kind: AggregationKind) -> AggregatedFeature:
    return AGGREGATORS[kind](fs)


def concat_aggregates(parts: Sequence[AggregatedFeature]) -> AggregatedFeature:
    """Feature-level concatenation of already aggregated vectors (e.g. f1 + f2)."""
    if not parts:
        raise EmptyFeatureSet("Nothing to concatenate")
    values = np.concatenate([p.values for p in parts])
    return AggregatedFeature(kind=AggregationKind.CONCAT, values=values,
                             source_dim=values.shape[0], n_patches=1)


# A feature structure is an ordered tuple of kinds whose vectors are concatenated.
Structure = Tuple[AggregationKind, ...]


def structure_name(structure: Structure) -> str:
    return "+".join(k.value for k in structure)


def parse_structure(name: str) -> Structure:
    try:
        return tuple(AggregationKind(token.strip()) for token in name.split("+"))
    except ValueError:
        raise ValueError(f"Unknown feature structure {name!r}")


def structure_vector(fs: FeatureSet, structure: Structure) -> np.ndarray:
    if len(structure) == 1:
        return aggregate(fs, structure[0]).values
    return concat_aggregates([aggregate(fs, kind) for kind in structure]).values
