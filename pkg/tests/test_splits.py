"""Tests for content-disjoint Monte-Carlo splits."""
import pytest

from src.dataset.manifest import DatasetManifest, ImageEntry, ScoreKind
from src.errors import TooFewContents
from src.evaluation.splits import make_split, make_splits, n_train_contents


def manifest_of(n_contents, per_content=1, excluded=()):
    entries = [
        ImageEntry(image_id=f"c{c}_d{d}", path=f"c{c}_d{d}.pgm", score=2.5,
                   content_id=f"c{c}", excluded=f"c{c}_d{d}" in excluded)
        for c in range(n_contents) for d in range(per_content)
    ]
    return DatasetManifest(name="toy", score_kind=ScoreKind.MOS, score_range=(0.0, 5.0), entries=entries)


def test_train_size_rounding():
    """round-half-up of ratio * contents, clamped to leave a test content."""
    assert n_train_contents(25, 0.8) == 20
    assert n_train_contents(586, 0.8) == 469
    assert n_train_contents(10, 0.25) == 3
    assert n_train_contents(10, 0.05) == 1
    assert n_train_contents(10, 0.99) == 9
    assert n_train_contents(2, 0.5) == 1


def test_split_sizes():
    """25 contents at 0.8 give 20 train and 5 test contents."""
    split = make_split(manifest_of(25, per_content=4), 0.8, seed=0, run_index=0)

    assert len(split.train_ids) == 80
    assert len(split.test_ids) == 20


def test_contents_never_straddle():
    """Every content lands wholly on one side, over 1000 runs."""
    manifest = manifest_of(12, per_content=3)
    for split in make_splits(manifest, 0.7, n_runs=1000, seed=3):
        train_contents = {i.split("_")[0] for i in split.train_ids}
        test_contents = {i.split("_")[0] for i in split.test_ids}

        assert not train_contents & test_contents
        assert len(split.train_ids) + len(split.test_ids) == 36


def test_splits_are_reproducible():
    """Same seed and run index give the same split; runs differ."""
    manifest = manifest_of(30)
    a = make_splits(manifest, 0.8, n_runs=20, seed=11)
    b = make_splits(manifest, 0.8, n_runs=20, seed=11)

    assert [s.train_ids for s in a] == [s.train_ids for s in b]
    assert len({tuple(s.train_ids) for s in a}) > 1
    assert make_split(manifest, 0.8, 11, 7).test_ids == a[7].test_ids


def test_excluded_images_are_left_out():
    """Excluded entries join neither side."""
    split = make_split(manifest_of(5, per_content=2, excluded={"c0_d1"}), 0.6, seed=0, run_index=0)

    assert "c0_d1" not in split.train_ids + split.test_ids
    assert len(split.train_ids) + len(split.test_ids) == 9


def test_split_errors():
    """Bad ratios, seeds and single-content datasets."""
    with pytest.raises(TooFewContents):
        make_split(manifest_of(1, per_content=5), 0.8, 0, 0)
    with pytest.raises(ValueError):
        make_split(manifest_of(5), 1.0, 0, 0)
    with pytest.raises(ValueError):
        make_split(manifest_of(5), 0.5, -1, 0)
    with pytest.raises(ValueError):
        make_splits(manifest_of(5), 0.5, 0, 0)


def test_twenty_five_contents_over_many_runs():
    """25 contents at 0.8: every one of 1000 runs puts 20 contents in train and 5 in test."""
    manifest = manifest_of(25, per_content=2)
    for split in make_splits(manifest, 0.8, n_runs=1000, seed=0):
        train_contents = {i.split("_")[0] for i in split.train_ids}
        test_contents = {i.split("_")[0] for i in split.test_ids}

        assert len(train_contents) == 20
        assert len(test_contents) == 5
        assert not train_contents & test_contents
