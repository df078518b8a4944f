import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import mannwhitneyu

from winratio import DegenerateSampleError
from winratio.ranks import group_ranks
from winratio.wincore import (
    TABLE4_KAPPAS,
    TwoSample,
    individual_proportions,
    make_estimate,
    nnt,
    nnt_table,
    variance_theta,
    variance_theta_ranks,
    win_proportion_pairwise,
    win_proportion_ranks,
    win_ratio,
    wp_test,
)

from conftest import tied_sample

groups = st.lists(st.integers(0, 5), min_size=2, max_size=40)


def _brute_theta(y1, y2):
    d = np.subtract.outer(np.asarray(y2, float), np.asarray(y1, float))
    return float(((d > 0) + 0.5 * (d == 0)).mean())


def _brute_variance(y1, y2):
    """Placement variance written out pair by pair."""
    y1 = np.asarray(y1, float)
    y2 = np.asarray(y2, float)
    n1, n2 = len(y1), len(y2)
    h = (y2[:, None] > y1[None, :]) + 0.5 * (y2[:, None] == y1[None, :])
    theta = h.mean()
    v10 = sum((h[:, i].mean() - theta) ** 2 for i in range(n1)) / (n1 - 1)
    v01 = sum((h[j, :].mean() - theta) ** 2 for j in range(n2)) / (n2 - 1)
    return v10 / n1 + v01 / n2


def test_worked_example():
    s = TwoSample([0, 1, 2], [1, 1, 2])
    assert round(wp_test(s).estimate, 4) == 0.6111
    assert round(win_ratio(wp_test(s)).kappa, 4) == 1.5714


@given(groups, groups)
def test_rank_and_pairwise_paths_agree(y1, y2):
    s = TwoSample(y1, y2)
    want = _brute_theta(y1, y2)
    assert win_proportion_pairwise(s).theta_hat == pytest.approx(want, abs=1e-12)
    assert win_proportion_ranks(group_ranks(s)) == pytest.approx(want, abs=1e-12)


@given(groups, groups)
def test_variance_forms_agree(y1, y2):
    s = TwoSample(y1, y2)
    want = _brute_variance(y1, y2)
    assert variance_theta(individual_proportions(s)) == pytest.approx(want, rel=1e-10, abs=1e-15)
    assert variance_theta_ranks(group_ranks(s)) == pytest.approx(want, rel=1e-10, abs=1e-15)


@given(groups, groups)
def test_swapping_groups_reflects_theta(y1, y2):
    s = TwoSample(y1, y2)
    a = individual_proportions(s)
    b = individual_proportions(s.swapped())
    assert a.theta_hat + b.theta_hat == pytest.approx(1.0, abs=1e-12)
    assert variance_theta(a) == pytest.approx(variance_theta(b), rel=1e-10, abs=1e-15)


def test_placements_are_bounded(rng):
    y1, y2 = tied_sample(rng)
    props = individual_proportions(TwoSample(y1, y2))
    assert ((props.p >= 0) & (props.p <= 1)).all()
    assert ((props.q >= 0) & (props.q <= 1)).all()
    assert props.p.mean() == pytest.approx(1 - props.q.mean(), abs=1e-12)


def test_ci_is_clamped_and_flagged():
    est = make_estimate(0.95, 0.05, 0.05, 10, 10, "wp")
    assert est.ci_upper == 1.0 and est.clamped
    assert est.ci_lower == pytest.approx(0.95 - 1.959963984540054 * 0.05)


def test_identical_arms_give_half_and_p_one():
    est = wp_test(TwoSample([1.0, 2.0, 3.0, 4.0], [1.0, 2.0, 3.0, 4.0]))
    assert est.estimate == 0.5
    assert est.p_value == 1.0


def test_all_tied_sample_is_degenerate():
    with pytest.raises(DegenerateSampleError, match="degenerate"):
        wp_test(TwoSample([1, 1, 1], [1, 1]))


def test_separated_sample_is_degenerate():
    with pytest.raises(DegenerateSampleError):
        wp_test(TwoSample([0, 1], [5, 6]))


def test_too_small_groups_rejected():
    with pytest.raises(ValueError, match="at least 2"):
        wp_test(TwoSample([0], [1, 2]))


def test_p_value_against_scipy_normal_approximation(rng):
    # with no ties the win-proportion z is not the Wilcoxon z, but p lies in (0, 1]
    y1, y2 = rng.normal(size=30), rng.normal(0.5, 1, 40)
    est = wp_test(TwoSample(y1, y2))
    assert est.estimate == pytest.approx(mannwhitneyu(y2, y1).statistic / (30 * 40))
    assert 0 < est.p_value <= 1
    assert est.p_value == pytest.approx(math.erfc(abs(est.z) / math.sqrt(2)))


def test_win_ratio_at_one_is_infinite():
    est = make_estimate(1.0, 0.01, 0.05, 5, 5, "wp")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        wr = win_ratio(est)
    assert math.isinf(wr.kappa)
    assert any("infinite" in str(w.message) for w in caught)


def test_win_ratio_is_monotone_in_theta():
    lo = win_ratio(make_estimate(0.55, 0.02, 0.05, 5, 5, "wp")).kappa
    hi = win_ratio(make_estimate(0.60, 0.02, 0.05, 5, 5, "wp")).kappa
    assert 1 < lo < hi


@pytest.mark.parametrize("theta,expected", [(0.5412844, 13), (0.75, 2), (0.5238095, 21), (1.0, 1), (0.54, 13)])
def test_nnt_values(theta, expected):
    assert nnt(theta) == expected


@pytest.mark.parametrize("theta", [0.5, 0.3])
def test_nnt_without_benefit(theta):
    with pytest.raises(ValueError, match="no benefit"):
        nnt(theta)


def test_nnt_table_rows():
    rows = nnt_table()
    assert [r[0] for r in rows] == list(TABLE4_KAPPAS)
    assert rows[3][1] == pytest.approx(0.5412844, abs=5e-8)
    with pytest.raises(ValueError, match="no benefit"):
        nnt_table([1.0])
