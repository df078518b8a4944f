import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import rankdata

from winratio.ranks import group_ranks, midranks, ordinal_codes
from winratio.wincore import TwoSample
from winratio.composite import CompositeValue, Tier


def test_midranks_worked_example():
    assert midranks([3, 3, 2, 1, 4, 4, 4, 4, 4]).tolist() == [3.5, 3.5, 2, 1, 7, 7, 7, 7, 7]


@given(st.lists(st.integers(-5, 5), min_size=1, max_size=80))
def test_midranks_match_scipy(values):
    np.testing.assert_array_equal(midranks(values), rankdata(values, method="average"))


@given(st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=1, max_size=80))
def test_rank_sum_is_triangular(values):
    n = len(values)
    assert midranks(values).sum() == pytest.approx(n * (n + 1) / 2, rel=1e-12)


@given(st.lists(st.sampled_from("abcde"), min_size=1, max_size=40))
def test_comparator_path_matches_numeric_path(letters):
    numeric = [ord(c) for c in letters]
    np.testing.assert_array_equal(midranks(letters), midranks(numeric))


def test_ordinal_codes_are_dense_and_order_preserving():
    codes = ordinal_codes(["c", "a", "c", "b"])
    assert codes.tolist() == [2, 0, 2, 1]


def test_empty_and_nan_rejected():
    with pytest.raises(ValueError, match="empty sample"):
        midranks([])
    with pytest.raises(ValueError, match="NaN"):
        midranks([1.0, float("nan")])


def test_universal_ties_have_no_ranks():
    wild = CompositeValue(Tier.ALIVE, 0.0, tie_with_all=True)
    with pytest.raises(ValueError, match="pairwise"):
        midranks([CompositeValue(Tier.ALIVE, 1.0), wild])
    sample = TwoSample([CompositeValue(Tier.ALIVE, 1.0), wild], [CompositeValue(Tier.DEATH, 0.0)] * 2)
    with pytest.raises(ValueError, match="tie with everything"):
        group_ranks(sample)


def test_group_ranks_layout_and_variance(rng):
    y1 = rng.integers(0, 4, 15).astype(float)
    y2 = rng.integers(0, 4, 9).astype(float)
    r = group_ranks(TwoSample(y1, y2))
    np.testing.assert_array_equal(r.combined, rankdata(np.concatenate([y1, y2])))
    np.testing.assert_array_equal(r.within_group_2, rankdata(y2))
    assert r.rank_sum_2 == r.group_2.sum()
    assert r.var_pooled == pytest.approx(np.var(r.combined, ddof=1), rel=1e-12)
