"""Tests for patch-feature aggregation."""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.aggregation.aggregators import (
    AggregationKind, agg_concat, agg_mean, agg_mean_std, agg_moment, agg_quantile,
    aggregate, concat_aggregates, parse_structure, structure_name, structure_vector,
)
from src.errors import NeedAtLeastTwoPatches
from src.features.backend import ExtractorConfig, FeatureSet


def feature_set(values, image_id="img"):
    values = np.asarray(values, dtype=np.float64)
    if values.ndim == 1:
        values = values.reshape(-1, 1)
    return FeatureSet(image_id, values, ExtractorConfig())


def naive_quantile(column, q):
    s = sorted(column)
    h = (len(s) - 1) * q
    lo = math.floor(h)
    hi = min(lo + 1, len(s) - 1)
    return s[lo] + (h - lo) * (s[hi] - s[lo])


def naive_column_stats(column):
    n = len(column)
    mean = math.fsum(column) / n
    dev = [v - mean for v in column]
    central = {k: math.fsum(d ** k for d in dev) / n for k in (2, 3, 4)}
    std = math.sqrt(math.fsum(d * d for d in dev) / (n - 1)) if n > 1 else None
    return mean, std, central


def test_single_column_hand_values():
    """Column 1..5: mean 3, std sqrt(2.5), quartiles 1..5, moment roots sqrt(2), 0, (34/5)^(1/4)."""
    fs = feature_set([1, 2, 3, 4, 5])

    assert agg_mean(fs).values.tolist() == [3.0]
    assert np.allclose(agg_mean_std(fs).values, [3.0, math.sqrt(2.5)])
    assert np.allclose(agg_quantile(fs).values, [1, 2, 3, 4, 5])
    assert np.allclose(agg_moment(fs).values, [3.0, math.sqrt(2), 0.0, (34 / 5) ** 0.25])


def test_skewed_column_keeps_sign():
    """0, 0, 3 has positive third moment 2, so the cube root is 2^(1/3)."""
    moment = agg_moment(feature_set([0, 0, 3])).values
    assert moment[2] == pytest.approx(2 ** (1 / 3))

    flipped = agg_moment(feature_set([0, 0, -3])).values
    assert flipped[2] == pytest.approx(-(2 ** (1 / 3)))


def test_two_patches():
    """3, 1: sample std sqrt(2) and linearly interpolated quartiles."""
    fs = feature_set([3, 1])

    assert np.allclose(agg_mean_std(fs).values, [2.0, math.sqrt(2)])
    assert np.allclose(agg_quantile(fs).values, [1.0, 1.5, 2.0, 2.5, 3.0])


def test_block_layout():
    """Blocks are stat-major: all means, then all stds, and so on."""
    fs = feature_set([[1.0, 10.0], [3.0, 30.0]])

    assert np.allclose(agg_mean_std(fs).values, [2.0, 20.0, math.sqrt(2), math.sqrt(200)])
    assert agg_quantile(fs).values[:2].tolist() == [1.0, 10.0]
    assert agg_quantile(fs).values[-2:].tolist() == [3.0, 30.0]
    assert agg_concat(fs).values.tolist() == [1.0, 10.0, 3.0, 30.0]


def test_output_lengths():
    """Lengths are l, 2l, 5l, 4l and n*l."""
    fs = feature_set(np.arange(21.0).reshape(7, 3))
    lengths = {kind: len(aggregate(fs, kind)) for kind in AggregationKind}

    assert lengths == {
        AggregationKind.MEAN: 3,
        AggregationKind.MEAN_STD: 6,
        AggregationKind.QUANTILE: 15,
        AggregationKind.MOMENT: 12,
        AggregationKind.CONCAT: 21,
    }


def test_single_patch():
    """One patch: mean/quantile/moment are defined, mean&std is not."""
    fs = feature_set([[4.0, -1.0]])

    assert agg_mean(fs).values.tolist() == [4.0, -1.0]
    assert agg_quantile(fs).values.tolist() == [4.0, -1.0] * 5
    assert agg_moment(fs).values.tolist() == [4.0, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]
    with pytest.raises(NeedAtLeastTwoPatches):
        agg_mean_std(fs)


def test_against_naive_formulas():
    """1000 random feature sets agree with straightforward per-column formulas."""
    rng = np.random.default_rng(2024)
    for _ in range(1000):
        n = int(rng.integers(2, 101))
        l = int(rng.integers(1, 33))
        scale = rng.uniform(0.1, 100.0)
        d = rng.uniform(-50, 50) + scale * rng.standard_normal((n, l))
        fs = feature_set(d)

        mean_std = agg_mean_std(fs).values
        quantile = agg_quantile(fs).values.reshape(5, l)
        moment = agg_moment(fs).values.reshape(4, l)
        for j in range(l):
            column = d[:, j].tolist()
            mean, std, central = naive_column_stats(column)

            assert mean_std[j] == pytest.approx(mean, rel=1e-9, abs=1e-9 * scale)
            assert mean_std[l + j] == pytest.approx(std, rel=1e-9)
            for i, q in enumerate((0.0, 0.25, 0.5, 0.75, 1.0)):
                assert quantile[i, j] == pytest.approx(naive_quantile(column, q), rel=1e-9, abs=1e-9 * scale)
            assert moment[0, j] == pytest.approx(mean, rel=1e-9, abs=1e-9 * scale)
            assert moment[1, j] == pytest.approx(math.sqrt(central[2]), rel=1e-9)
            # cube the odd root back; near-symmetric columns leave m3 at rounding level
            assert moment[2, j] ** 3 == pytest.approx(central[3], rel=1e-9, abs=1e-9 * scale ** 3)
            assert moment[3, j] == pytest.approx(central[4] ** 0.25, rel=1e-9)

        assert quantile[0].tolist() == d.min(axis=0).tolist()
        assert quantile[4].tolist() == d.max(axis=0).tolist()


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), n=st.integers(2, 40), l=st.integers(1, 8))
def test_row_order_does_not_matter(seed, n, l):
    """Every statistic except concat is invariant to patch order."""
    rng = np.random.default_rng(seed)
    d = 10 * rng.standard_normal((n, l))
    original = feature_set(d)
    shuffled = feature_set(d[rng.permutation(n)])

    for kind in (AggregationKind.MEAN, AggregationKind.MEAN_STD, AggregationKind.QUANTILE):
        assert np.allclose(aggregate(original, kind).values, aggregate(shuffled, kind).values,
                           rtol=1e-12, atol=1e-12)
    a = agg_moment(original).values.reshape(4, l)
    b = agg_moment(shuffled).values.reshape(4, l)
    a[2], b[2] = a[2] ** 3, b[2] ** 3
    assert np.allclose(a, b, rtol=1e-9, atol=1e-9)


def test_structures():
    """Structures parse by name and concatenate in order."""
    fs = feature_set([[1.0], [3.0]])
    structure = parse_structure("mean_std+quantile")

    assert structure == (AggregationKind.MEAN_STD, AggregationKind.QUANTILE)
    assert structure_name(structure) == "mean_std+quantile"
    assert np.allclose(structure_vector(fs, structure), [2.0, math.sqrt(2), 1.0, 1.5, 2.0, 2.5, 3.0])
    assert structure_vector(fs, (AggregationKind.MEAN,)).tolist() == [2.0]

    joined = concat_aggregates([agg_mean(fs), agg_mean(fs)])
    assert joined.kind is AggregationKind.CONCAT
    assert joined.values.tolist() == [2.0, 2.0]

    with pytest.raises(ValueError):
        parse_structure("mean+median")
