import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import mannwhitneyu, rankdata

from winratio import DegenerateSampleError, _kernels
from winratio.adjust import CovariatePair, StratifiedData, Stratum, stratified_wp
from winratio.classical import (
    fligner_policello,
    hodges_lehmann,
    rank_ancova,
    regression_on_ranks,
    wp_wilcoxon_ratio,
    z0_fp_ratio,
    stratified_van_elteren_ratio,
    van_elteren,
    wilcoxon_test,
    z0_statistic,
)
from winratio.wincore import TwoSample, wp_test

from conftest import tied_sample

groups = st.lists(st.integers(0, 6), min_size=2, max_size=40)


def _nonconstant(y1, y2):
    return len(set(y1) | set(y2)) > 1


@given(groups, groups)
def test_wilcoxon_p_matches_scipy(y1, y2):
    if not _nonconstant(y1, y2):
        return
    res = wilcoxon_test(TwoSample(y1, y2))
    ref = mannwhitneyu(y2, y1, use_continuity=False, method="asymptotic")
    assert res.p_value == pytest.approx(ref.pvalue, rel=1e-9, abs=1e-14)


@given(groups, groups)
def test_mann_whitney_identity_is_exact(y1, y2):
    if not _nonconstant(y1, y2):
        return
    s = TwoSample(y1, y2)
    wins, _ = _kernels.pairwise_scores(s.y1, s.y2)
    assert wilcoxon_test(s).details["mann_whitney"] == wins.sum()


def test_all_tied_wilcoxon_is_degenerate():
    with pytest.raises(DegenerateSampleError, match="tied"):
        wilcoxon_test(TwoSample([2, 2], [2, 2, 2]))


def test_wp_wilcoxon_ratio_equals_squared_z_ratio(rng):
    for _ in range(20):
        y1, y2 = tied_sample(rng, 60)
        s = TwoSample(y1, y2)
        try:
            r = wp_wilcoxon_ratio(s)
            zw = wilcoxon_test(s).statistic
            zp = wp_test(s).z
        except DegenerateSampleError:
            continue
        if zw != 0:
            assert (zp / zw) ** 2 == pytest.approx(r, rel=1e-10)


def test_hodges_lehmann_worked_example():
    assert hodges_lehmann(TwoSample([0, 1, 2], [1, 1, 2])) == 0.0


@given(st.lists(st.floats(-50, 50), min_size=1, max_size=15), st.lists(st.floats(-50, 50), min_size=1, max_size=15))
def test_hodges_lehmann_is_median_of_differences(y1, y2):
    d = [b - a for b in y2 for a in y1]
    assert hodges_lehmann(TwoSample(y1, y2)) == pytest.approx(float(np.median(d)), abs=1e-9)


def test_hodges_lehmann_needs_numbers():
    with pytest.raises(ValueError, match="numeric"):
        hodges_lehmann(TwoSample(["a", "b"], ["b", "c"]))


def _fp_by_hand(y1, y2):
    y1, y2 = np.asarray(y1, float), np.asarray(y2, float)
    n1, n2 = len(y1), len(y2)
    p = np.array([np.mean((b > y1) + 0.5 * (b == y1)) for b in y2])
    q = np.array([np.mean((y2 < a) + 0.5 * (y2 == a)) for a in y1])
    theta = p.mean()
    ssp = ((p - theta) ** 2).sum()
    ssq = ((q - (1 - theta)) ** 2).sum()
    f = (theta - 0.5) / math.sqrt(ssp / n2 ** 2 + ssq / n1 ** 2 + theta * (1 - theta) / (n1 * n2))
    z0 = (theta - 0.5) / math.sqrt(ssp / n2 ** 2 + ssq / n1 ** 2)
    return f, z0


@pytest.mark.parametrize("seed", range(6))
def test_fligner_policello_and_z0_by_hand(seed):
    rng = np.random.default_rng(seed)
    y1, y2 = tied_sample(rng, 50)
    s = TwoSample(y1, y2)
    f, z0 = _fp_by_hand(y1, y2)
    assert fligner_policello(s).statistic == pytest.approx(f, rel=1e-10, abs=1e-12)
    assert z0_statistic(s).statistic == pytest.approx(z0, rel=1e-10, abs=1e-12)


@given(groups, groups)
def test_z0_dominates_fligner_policello(y1, y2):
    s = TwoSample(y1, y2)
    try:
        r = z0_fp_ratio(s)
        z0 = z0_statistic(s).statistic
        f = fligner_policello(s).statistic
    except DegenerateSampleError:
        return
    assert r >= 1.0
    assert z0 ** 2 >= f ** 2
    if f != 0:
        assert (z0 / f) ** 2 == pytest.approx(r, rel=1e-10)


def _ols_residual_z(y1, y2, x1, x2):
    """Wilcoxon z on OLS residuals of pooled ranks, via numpy least squares."""
    r = rankdata(np.concatenate([y1, y2]))
    x = np.concatenate([x1, x2])
    design = np.column_stack([np.ones_like(x), x])
    coef, *_ = np.linalg.lstsq(design, r, rcond=None)
    res = r - design @ coef
    n1, n2 = len(y1), len(y2)
    n = n1 + n2
    return res[n1:].sum() / math.sqrt(n1 * n2 / n * res.var(ddof=1))


@pytest.mark.parametrize("seed", range(6))
def test_regression_on_ranks_matches_lstsq(seed):
    rng = np.random.default_rng(100 + seed)
    y1, y2 = tied_sample(rng, 80)
    x1 = y1 + rng.normal(size=len(y1))
    x2 = y2 + rng.normal(size=len(y2))
    res = regression_on_ranks(TwoSample(y1, y2), CovariatePair(x1, x2))
    assert res.statistic == pytest.approx(_ols_residual_z(y1, y2, x1, x2), rel=1e-9)
    assert res.details["z_theta_form"] == pytest.approx(res.statistic, rel=1e-10)
    assert res.details["z_mean_rank_form"] == pytest.approx(res.statistic, rel=1e-10)
    assert abs(res.details["residual_sum"]) < 1e-8


def _strata(seed, k=2, with_cov=True):
    rng = np.random.default_rng(seed)
    out = []
    for h in range(k):
        y1, y2 = tied_sample(rng, 40, min_n=3)
        cov = CovariatePair(y1 + rng.normal(size=len(y1)), y2 + rng.normal(size=len(y2))) if with_cov else None
        out.append(Stratum(TwoSample(y1, y2), cov, f"h{h}"))
    return StratifiedData(tuple(out))


def test_van_elteren_one_stratum_is_wilcoxon():
    data = _strata(1, k=1)
    assert van_elteren(data).statistic == pytest.approx(wilcoxon_test(data.strata[0].sample).statistic, rel=1e-12)


def test_van_elteren_by_hand():
    data = _strata(2, k=2)
    num = var = 0.0
    for s in data.strata:
        y1, y2 = s.sample.y1, s.sample.y2
        n1, n2 = len(y1), len(y2)
        n = n1 + n2
        r = rankdata(np.concatenate([y1, y2]))
        num += (r[n1:].sum() - n2 * (n + 1) / 2) / (n + 1)
        var += n1 * n2 / n * r.var(ddof=1) / (n + 1) ** 2
    assert van_elteren(data).statistic == pytest.approx(num / math.sqrt(var), rel=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_stratified_van_elteren_ratio_is_squared_z_ratio(seed):
    data = _strata(seed, k=3, with_cov=False)
    ve = van_elteren(data).statistic
    st_ = stratified_wp(StratifiedData(data.strata, "van-elteren")).z
    assert (st_ / ve) ** 2 == pytest.approx(stratified_van_elteren_ratio(data), rel=1e-10)


def test_rank_ancova_one_stratum_is_regression_on_ranks():
    data = _strata(4, k=1)
    s = data.strata[0]
    assert rank_ancova(data).statistic == pytest.approx(
        regression_on_ranks(s.sample, s.covariate).statistic, rel=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_rank_ancova_two_forms_agree(seed):
    res = rank_ancova(_strata(seed, k=3))
    assert res.details["z_theta_form"] == pytest.approx(res.statistic, rel=1e-10)


def test_rank_ancova_constant_covariate_names_stratum():
    s = Stratum(TwoSample([1.0, 2, 3], [2.0, 3, 4]), CovariatePair([1.0] * 3, [1.0] * 3), "flat")
    with pytest.raises(DegenerateSampleError, match="flat"):
        rank_ancova(StratifiedData((s,)))
