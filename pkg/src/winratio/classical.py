"""Classical rank procedures and their links to the win proportion.

Each test reports a normal ``z`` with a two-sided p-value.  The ratio
diagnostics are exposed as functions so reports can show how the win
proportion test compares with its rank counterpart on the same data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._common import DegenerateSampleError, two_sided_p
from .adjust import CovariatePair, StratifiedData, strata_weights
from .ranks import RankVectors, group_ranks
from .wincore import TwoSample, placements_from_ranks, variance_theta

# Relative tolerance of the internal identity checks.
_IDENTITY_RTOL = 1e-9


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float
    method: str
    details: dict = field(default_factory=dict, compare=False)

    __test__ = False  # not a pytest class

    def summary(self) -> str:
        p = "p<0.0001" if self.p_value < 1e-4 else f"p={self.p_value:.4f}"
        return f"{self.method}: z={self.statistic:.4f}, {p}"


def _result(z: float, method: str, **details) -> TestResult:
    return TestResult(float(z), two_sided_p(z), method, details)


def _check_identity(lhs: float, rhs: float, scale: float, what: str) -> None:
    if abs(lhs - rhs) > _IDENTITY_RTOL * max(1.0, abs(scale)):
        raise ArithmeticError(f"{what} identity violated: {lhs!r} != {rhs!r}")


def _need_two(sample: TwoSample) -> None:
    if sample.n1 < 2 or sample.n2 < 2:
        raise ValueError("each group needs at least 2 subjects")


def _centered_rank_sum(ranks: RankVectors) -> float:
    n = ranks.n1 + ranks.n2
    return ranks.rank_sum_2 - ranks.n2 * (n + 1) / 2.0


def wilcoxon_test(sample: TwoSample) -> TestResult:
    """Wilcoxon rank-sum z with the midrank (tie-aware) null variance."""
    _need_two(sample)
    ranks = group_ranks(sample)
    n1, n2 = ranks.n1, ranks.n2
    n = n1 + n2
    var_r = ranks.var_pooled
    if var_r <= 0.0:
        raise DegenerateSampleError("all values tied")
    w = ranks.rank_sum_2
    z = _centered_rank_sum(ranks) / math.sqrt(n1 * n2 / n * var_r)
    mann_whitney = w - n2 * (n2 + 1) / 2.0
    return _result(z, "wilcoxon", W=w, var_R=var_r, mann_whitney=mann_whitney,
                   theta=mann_whitney / (n1 * n2))


def wp_wilcoxon_ratio(sample: TwoSample) -> float:
    """Squared ratio of the win-proportion z to the Wilcoxon z.

    Returned in its variance form ``var(R) / (N n1 n2 sigma^2)``, which stays
    defined when both statistics are zero; when they are not, the ratio of
    the squared statistics is checked against it.
    """
    _need_two(sample)
    ranks = group_ranks(sample)
    n1, n2 = ranks.n1, ranks.n2
    n = n1 + n2
    props = placements_from_ranks(ranks)
    var_theta = variance_theta(props)
    var_r = ranks.var_pooled
    if var_theta <= 0.0 or var_r <= 0.0:
        raise DegenerateSampleError("ratio undefined: zero variance")
    ratio = var_r / (n * n1 * n2 * var_theta)
    z_wp = (props.theta_hat - 0.5) / math.sqrt(var_theta)
    z_w = _centered_rank_sum(ranks) / math.sqrt(n1 * n2 / n * var_r)
    if z_w != 0.0:
        _check_identity(z_wp ** 2 / z_w ** 2, ratio, ratio, "Wilcoxon/win-proportion ratio")
    return ratio


def hodges_lehmann(sample: TwoSample) -> float:
    """Median of all active-minus-placebo differences."""
    if not sample.numeric:
        raise ValueError("HL requires numeric responses")
    d = np.sort(np.subtract.outer(sample.y2, sample.y1).ravel())
    m = d.shape[0]
    if m % 2:
        return float(d[(m + 1) // 2 - 1])
    k = m // 2
    return float((d[k - 1] + d[k]) / 2.0)


def _placement_sums(sample: TwoSample):
    ranks = group_ranks(sample)
    props = placements_from_ranks(ranks)
    ss_p = float(((props.p - props.theta_hat) ** 2).sum())
    ss_q = float(((props.q - (1.0 - props.theta_hat)) ** 2).sum())
    return props, ss_p, ss_q


def fligner_policello(sample: TwoSample) -> TestResult:
    """Placement-based Fligner-Policello statistic."""
    _need_two(sample)
    props, ss_p, ss_q = _placement_sums(sample)
    n1, n2 = props.n1, props.n2
    theta = props.theta_hat
    num = n1 * n2 * theta - n1 * n2 * (1.0 - theta)
    inner = n2 ** 2 * ss_q + n1 ** 2 * ss_p + n1 * n2 * theta * (1.0 - theta)
    if inner <= 0.0:
        raise DegenerateSampleError("degenerate sample")
    return _result(num / (2.0 * math.sqrt(inner)), "fligner-policello", theta=theta)


def z0_statistic(sample: TwoSample, null: float = 0.5) -> TestResult:
    """Win-proportion z with ``1/n`` (biased) placement variances."""
    _need_two(sample)
    props, ss_p, ss_q = _placement_sums(sample)
    den2 = ss_p / props.n2 ** 2 + ss_q / props.n1 ** 2
    if den2 <= 0.0:
        raise DegenerateSampleError("degenerate sample")
    return _result((props.theta_hat - null) / math.sqrt(den2), "z0", theta=props.theta_hat)


def z0_fp_ratio(sample: TwoSample) -> float:
    """``(Z0 / F)^2`` at ``theta = 1/2``, as the ratio of squared denominators (always >= 1)."""
    _need_two(sample)
    props, ss_p, ss_q = _placement_sums(sample)
    n1, n2 = props.n1, props.n2
    z0_den2 = ss_p / n2 ** 2 + ss_q / n1 ** 2
    if z0_den2 <= 0.0:
        raise DegenerateSampleError("degenerate sample")
    f_den2 = z0_den2 + props.theta_hat * (1.0 - props.theta_hat) / (n1 * n2)
    return f_den2 / z0_den2


@dataclass(frozen=True)
class _Residuals:
    ranks: RankVectors
    residuals: np.ndarray
    slope: float
    var_r: float
    var_res: float
    theta: float
    mean_x1: float
    mean_x2: float


def _rank_residuals(sample: TwoSample, cov: CovariatePair, name: str = "") -> _Residuals:
    _need_two(sample)
    ranks = group_ranks(sample)
    x = np.concatenate([cov.x1, cov.x2])
    if x.shape[0] != ranks.combined.shape[0]:
        raise ValueError("covariate lengths do not match the response groups")
    n = x.shape[0]
    r = ranks.combined
    xc = x - x.mean()
    rc = r - r.mean()
    var_x = float((xc ** 2).sum() / (n - 1))
    if var_x <= 0.0:
        where = f" in stratum {name}" if name else ""
        raise DegenerateSampleError(f"constant covariate{where}")
    cov_rx = float((rc * xc).sum() / (n - 1))
    slope = cov_rx / var_x
    var_r = ranks.var_pooled
    var_res = var_r - cov_rx * slope
    if not var_res > 0.0:
        where = f" in stratum {name}" if name else ""
        raise DegenerateSampleError(f"zero residual rank variance{where}")
    n1, n2 = ranks.n1, ranks.n2
    theta = float((ranks.rank_sum_2 - n2 * (n2 + 1) / 2.0) / (n1 * n2))
    return _Residuals(ranks, rc - xc * slope, slope, var_r, var_res, theta,
                      cov.mean1, cov.mean2)


def regression_on_ranks(sample: TwoSample, cov: CovariatePair) -> TestResult:
    """Wilcoxon z computed on ranks residualized on the pooled covariate."""
    rr = _rank_residuals(sample, cov)
    n1, n2 = rr.ranks.n1, rr.ranks.n2
    n = n1 + n2
    w_res = float(rr.residuals[n1:].sum())
    shift = (rr.mean_x2 - rr.mean_x1) * rr.slope
    expected = n1 * n2 * (rr.theta - 0.5) - n1 * n2 / n * shift
    _check_identity(w_res, expected, n1 * n2, "residual rank-sum")
    z = w_res / math.sqrt(n1 * n2 / n * rr.var_res)
    den = math.sqrt(rr.var_res / (n1 * n2 * n))
    z_theta_form = (rr.theta - 0.5 - shift / n) / den
    z_mean_rank_form = (rr.ranks.mean_rank_2 - rr.ranks.mean_rank_1 - shift) / n / den
    return _result(z, "rank-regression", W_res=w_res, residual_sum=float(rr.residuals.sum()),
                   slope=rr.slope, var_R=rr.var_r, var_R_res=rr.var_res, theta=rr.theta,
                   z_theta_form=z_theta_form, z_mean_rank_form=z_mean_rank_form)


def _stratum_name(data: StratifiedData, k: int) -> str:
    return data.strata[k].label or str(k)


def van_elteren(data: StratifiedData) -> TestResult:
    """Stratified Wilcoxon with per-stratum coefficients ``1 / (n_h + 1)``."""
    num = 0.0
    var = 0.0
    for k, s in enumerate(data.strata):
        ranks = group_ranks(s.sample)
        n1, n2 = ranks.n1, ranks.n2
        n = n1 + n2
        var_r = ranks.var_pooled
        if var_r <= 0.0:
            raise DegenerateSampleError(f"degenerate stratum {_stratum_name(data, k)}: all values tied")
        c = 1.0 / (n + 1)
        num += c * _centered_rank_sum(ranks)
        var += c ** 2 * n1 * n2 / n * var_r
    return _result(num / math.sqrt(var), "van-elteren")


def stratified_van_elteren_ratio(data: StratifiedData) -> float:
    """``(Z_str / Z_Elt)^2`` with van Elteren weights, in variance form."""
    w0 = strata_weights(data.sizes, "van-elteren")
    num = 0.0
    den = 0.0
    z_num = 0.0
    for k, (wk, s) in enumerate(zip(w0, data.strata)):
        ranks = group_ranks(s.sample)
        n1, n2 = ranks.n1, ranks.n2
        n = n1 + n2
        props = placements_from_ranks(ranks)
        var_theta = variance_theta(props)
        if ranks.var_pooled <= 0.0 or var_theta <= 0.0:
            raise DegenerateSampleError(f"degenerate stratum {_stratum_name(data, k)}")
        num += wk ** 2 * ranks.var_pooled / (n1 * n2 * n)
        den += wk ** 2 * var_theta
        z_num += wk * (props.theta_hat - 0.5)
    ratio = num / den
    if z_num != 0.0:
        z_str = z_num / math.sqrt(den)
        z_elt = z_num / math.sqrt(num)
        _check_identity(z_str ** 2 / z_elt ** 2, ratio, ratio, "stratified/van Elteren ratio")
    return ratio


def rank_ancova(data: StratifiedData) -> TestResult:
    """Van Elteren combination of per-stratum covariate-residualized ranks.

    Also evaluates the same statistic in win-proportion form (stratified
    crude win proportion minus a covariate correction); the two must agree.
    """
    w0 = strata_weights(data.sizes, "van-elteren")
    num = 0.0
    var = 0.0
    theta_str = 0.0
    correction = 0.0
    var_theta_form = 0.0
    for k, (wk, s) in enumerate(zip(w0, data.strata)):
        if s.covariate is None:
            raise ValueError(f"stratum {_stratum_name(data, k)} has no covariate")
        rr = _rank_residuals(s.sample, s.covariate, _stratum_name(data, k))
        n1, n2 = rr.ranks.n1, rr.ranks.n2
        n = n1 + n2
        c = 1.0 / (n + 1)
        num += c * float(rr.residuals[n1:].sum())
        var += c ** 2 * n1 * n2 / n * rr.var_res
        theta_str += wk * rr.theta
        correction += wk / n * (rr.mean_x2 - rr.mean_x1) * rr.slope
        var_theta_form += wk ** 2 / (n1 * n2 * n) * rr.var_res
    z = num / math.sqrt(var)
    z_theta_form = (theta_str - 0.5 - correction) / math.sqrt(var_theta_form)
    _check_identity(z, z_theta_form, z, "rank ANCOVA")
    return _result(z, "rank-ancova", z_theta_form=z_theta_form, theta_stratified=theta_str)
