"""Content-disjoint train/test splits for Monte-Carlo cross-validation."""
import math
from dataclasses import dataclass, field
from typing import List

import numpy as np

from src.dataset.manifest import DatasetManifest
from src.errors import TooFewContents


@dataclass(frozen=True)
class SplitPlan:
    seed: int
    run_index: int
    train_ratio: float
    train_ids: List[str] = field(default_factory=list)
    test_ids: List[str] = field(default_factory=list)


def n_train_contents(n_contents: int, train_ratio: float) -> int:
    """round-half-up(ratio * n), kept inside [1, n - 1] so both sides are non-empty."""
    return min(max(math.floor(train_ratio * n_contents + 0.5), 1), n_contents - 1)


def run_rng(seed: int, run_index: int) -> np.random.Generator:
    """Generator owned by one run; independent of how runs are scheduled."""
    return np.random.default_rng([seed, run_index])


def make_split(manifest: DatasetManifest, train_ratio: float, seed: int, run_index: int) -> SplitPlan:
    if not 0 < train_ratio < 1:
        raise ValueError(f"train_ratio must lie in (0, 1), got {train_ratio}")
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    groups = manifest.content_groups()
    contents = list(groups)
    if len(contents) < 2:
        raise TooFewContents(f"{manifest.name} has {len(contents)} content group(s); need at least 2")

    order = run_rng(seed, run_index).permutation(len(contents))
    train_contents = {contents[i] for i in order[:n_train_contents(len(contents), train_ratio)]}
    train_ids, test_ids = [], []
    for entry in manifest.active_entries():
        (train_ids if entry.content_id in train_contents else test_ids).append(entry.image_id)
    return SplitPlan(seed=seed, run_index=run_index, train_ratio=train_ratio,
                     train_ids=train_ids, test_ids=test_ids)


def make_splits(manifest: DatasetManifest, train_ratio: float, n_runs: int, seed: int) -> List[SplitPlan]:
    if n_runs < 1:
        raise ValueError(f"n_runs must be positive, got {n_runs}")
    return [make_split(manifest, train_ratio, seed, run) for run in range(n_runs)]
