"""
Tests for mergeable moment accumulators.
"""

import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), ".."))

from cylfpp.accumulator import MAX_ORDER, MomentAccumulator, merge_accumulators


def assert_close(x, y, rtol=1e-9):
    """Counts, extremes and moments agree to ``rtol`` of their natural scale."""
    assert x.count == y.count
    assert x.minimum == y.minimum
    assert x.maximum == y.maximum
    assert x.mean == pytest.approx(y.mean, rel=rtol, abs=1e-12)
    for p in range(2, MAX_ORDER + 1):
        scale = max(abs(x.M(p)), abs(y.M(p)), x.M(2) ** (p / 2) / max(x.count, 1) ** (p / 2 - 1), 1e-300)
        assert abs(x.M(p) - y.M(p)) <= rtol * scale, p


def test_merge_example():
    merged = merge_accumulators(MomentAccumulator.from_values([1.0, 2.0]), MomentAccumulator.from_values([3.0]))
    assert merged.count == 3
    assert merged.mean == pytest.approx(2.0)
    assert merged.M(2) == pytest.approx(2.0)
    assert merged.M(3) == pytest.approx(0.0, abs=1e-12)
    assert merged.M(4) == pytest.approx(2.0)
    assert (merged.minimum, merged.maximum) == (1.0, 3.0)
    assert merged.variance == pytest.approx(1.0)


def test_empty_is_identity():
    acc = MomentAccumulator.from_values([0.5, 1.5, 4.0])
    for merged in (acc.merge(MomentAccumulator()), MomentAccumulator().merge(acc)):
        assert_close(merged, acc, rtol=0.0)
    empty = MomentAccumulator().merge(MomentAccumulator())
    assert empty.count == 0
    assert np.isnan(empty.variance)


def test_merge_matches_single_pass():
    rng = np.random.default_rng(0)
    x = rng.exponential(size=997)
    whole = MomentAccumulator.from_values(x)
    for cut in (1, 10, 500, 996):
        split = MomentAccumulator.from_values(x[:cut]).merge(MomentAccumulator.from_values(x[cut:]))
        assert_close(split, whole)


def test_merge_commutes():
    rng = np.random.default_rng(1)
    a = MomentAccumulator.from_values(rng.normal(3.0, 2.0, 300))
    b = MomentAccumulator.from_values(rng.normal(-1.0, 0.5, 50))
    assert_close(a.merge(b), b.merge(a))


def test_tree_shape_does_not_matter():
    """Left fold, right fold and balanced tree agree to 1e-9 relative."""
    rng = np.random.default_rng(2)
    chunks = [MomentAccumulator.from_values(rng.uniform(0, 5, size)) for size in rng.integers(1, 80, 16)]

    left = MomentAccumulator()
    for chunk in chunks:
        left = left.merge(chunk)
    right = MomentAccumulator()
    for chunk in reversed(chunks):
        right = chunk.merge(right)
    level = chunks
    while len(level) > 1:
        level = [level[i].merge(level[i + 1]) if i + 1 < len(level) else level[i] for i in range(0, len(level), 2)]
    balanced = level[0]

    assert_close(left, right)
    assert_close(left, balanced)


def test_incremental_updates():
    values = [2.0, 7.5, 1.25, 3.0, 3.0]
    acc = MomentAccumulator()
    for v in values[:3]:
        acc = acc.add(v)
    acc = acc.update(values[3:])
    assert_close(acc, MomentAccumulator.from_values(values))


def test_constant_sample_has_zero_variance():
    acc = MomentAccumulator()
    for _ in range(10):
        acc = acc.merge(MomentAccumulator.from_values([2.5] * 7))
    assert acc.variance == 0.0
    assert acc.std_error == 0.0
    assert np.isnan(acc.skewness)


def test_derived_statistics():
    rng = np.random.default_rng(3)
    x = rng.normal(1.0, 2.0, 5000)
    acc = MomentAccumulator.from_values(x)
    assert acc.variance == pytest.approx(np.var(x, ddof=1), rel=1e-12)
    assert acc.std_error == pytest.approx(np.std(x, ddof=1) / np.sqrt(x.size), rel=1e-12)
    assert acc.central_moment(4) == pytest.approx(np.mean((x - x.mean()) ** 4), rel=1e-9)
    assert abs(acc.skewness) < 0.2
    assert abs(acc.excess_kurtosis) < 0.3
    assert acc.variance_std_error > 0


def test_dict_roundtrip():
    acc = MomentAccumulator.from_values([1.0, 4.0, 9.0])
    data = acc.to_dict()
    assert data["variance"] == pytest.approx(acc.variance)
    assert_close(MomentAccumulator.from_dict(data), acc, rtol=0.0)
    empty = MomentAccumulator.from_dict(MomentAccumulator().to_dict())
    assert empty.count == 0


if __name__ == "__main__":
    test_merge_example()
    test_empty_is_identity()
    test_merge_matches_single_pass()
    test_merge_commutes()
    test_tree_shape_does_not_matter()
    test_incremental_updates()
    test_constant_sample_has_zero_variance()
    test_derived_statistics()
    test_dict_roundtrip()
    print("All tests passed!")
