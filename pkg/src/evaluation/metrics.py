"""SROCC, PLCC and RMSE."""
from typing import Mapping, Tuple

import numpy as np
from scipy.stats import rankdata

from src.errors import DegenerateInput, LengthMismatch


def _pair(x, y, min_len: int):
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if x.shape != y.shape:
        raise LengthMismatch(f"Score vectors differ in length: {x.size} vs {y.size}")
    if x.size < min_len:
        raise LengthMismatch(f"Need at least {min_len} paired scores, got {x.size}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise DegenerateInput("Score vectors must be finite")
    return x, y


def _pearson(x: np.ndarray, y: np.ndarray) -> float:
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        raise DegenerateInput("Correlation is undefined for a constant vector")
    xc = x - x.mean()
    yc = y - y.mean()
    r = (xc @ yc) / np.sqrt((xc @ xc) * (yc @ yc))
    return float(np.clip(r, -1.0, 1.0))


def srocc(x, y) -> float:
    """Pearson correlation of tie-averaged ranks."""
    x, y = _pair(x, y, 3)
    return _pearson(rankdata(x, method="average"), rankdata(y, method="average"))


def plcc(x, y) -> float:
    x, y = _pair(x, y, 2)
    return _pearson(x, y)


def rmse(x, y) -> float:
    x, y = _pair(x, y, 2)
    d = x - y
    return float(np.sqrt(np.mean(d * d)))


def weighted_average(values: Mapping[str, Tuple[float, int]]) -> float:
    """Size-weighted mean of per-database values, e.g. {"BID": (0.83, 586)}."""
    if not values:
        raise DegenerateInput("No databases to average")
    total = sum(size for _, size in values.values())
    if total <= 0:
        raise DegenerateInput("Database sizes must be positive")
    return float(sum(value * size for value, size in values.values()) / total)
