"""Covariate-adjusted and stratified win proportions.

Strata are indexed ``h`` and groups ``g`` (1 = placebo, 2 = active), so a
stratum's sizes are ``(n_h1, n_h2)``.  Stratification combines the crude
per-stratum statistics first with shared weights and adjusts once at the
end.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

from ._common import DegenerateSampleError, check_alpha
from .ranks import midranks
from .wincore import (
    Estimate,
    IndividualProportions,
    TwoSample,
    individual_proportions,
    make_estimate,
    variance_theta,
    wp_test,
)

WEIGHT_SCHEMES = ("sample-size", "van-elteren")


@dataclass(frozen=True)
class CovariatePair:
    """Numeric covariate values for the placebo (``x1``) and active (``x2``) arms."""

    x1: np.ndarray
    x2: np.ndarray

    def __post_init__(self):
        x1 = np.asarray(self.x1, dtype=np.float64).ravel()
        x2 = np.asarray(self.x2, dtype=np.float64).ravel()
        if np.isnan(x1).any() or np.isnan(x2).any():
            raise ValueError("covariate has missing values")
        object.__setattr__(self, "x1", x1)
        object.__setattr__(self, "x2", x2)

    @property
    def mean1(self) -> float:
        return float(self.x1.mean())

    @property
    def mean2(self) -> float:
        return float(self.x2.mean())

    @property
    def var1(self) -> float:
        return float(self.x1.var(ddof=1))

    @property
    def var2(self) -> float:
        return float(self.x2.var(ddof=1))

    def moments(self, props: IndividualProportions) -> "CovariateMoments":
        """Mean difference, its variance and its covariance with ``theta_hat``."""
        if self.x1.shape[0] != props.n1 or self.x2.shape[0] != props.n2:
            raise ValueError("covariate lengths do not match the response groups")
        n1, n2 = props.n1, props.n2
        cov1 = float(((props.q - (1.0 - props.theta_hat)) * (self.x1 - self.mean1)).sum() / (n1 - 1))
        cov2 = float(((props.p - props.theta_hat) * (self.x2 - self.mean2)).sum() / (n2 - 1))
        return CovariateMoments(
            mean_diff=self.mean2 - self.mean1,
            var_mean_diff=self.var1 / n1 + self.var2 / n2,
            cov_with_theta=cov1 / n1 + cov2 / n2,
            cov1=cov1,
            cov2=cov2,
        )


@dataclass(frozen=True)
class CovariateMoments:
    mean_diff: float        # active mean minus placebo mean
    var_mean_diff: float
    cov_with_theta: float
    cov1: float             # cov(x1, placebo placements)
    cov2: float             # cov(x2, active placements)


@dataclass(frozen=True)
class Stratum:
    sample: TwoSample
    covariate: CovariatePair | None = None
    label: str = ""


@dataclass(frozen=True)
class StratifiedData:
    """Strata plus a weight scheme: a scheme name or explicit weights."""

    strata: tuple[Stratum, ...]
    weights: str | tuple[float, ...] = "sample-size"

    def __post_init__(self):
        strata = tuple(self.strata)
        if not strata:
            raise ValueError("at least one stratum is required")
        for k, s in enumerate(strata):
            if s.sample.n1 < 2 or s.sample.n2 < 2:
                raise ValueError(f"stratum {s.label or k}: each group needs at least 2 subjects")
        object.__setattr__(self, "strata", strata)
        if not isinstance(self.weights, str):
            object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))

    @property
    def sizes(self) -> list[tuple[int, int]]:
        return [(s.sample.n1, s.sample.n2) for s in self.strata]

    def labels(self) -> list[str]:
        return [s.label or str(k) for k, s in enumerate(self.strata)]

    def resolved_weights(self) -> np.ndarray:
        return strata_weights(self.sizes, self.weights)


def strata_weights(sizes: Sequence[tuple[int, int]], scheme: str | Sequence[float] = "sample-size") -> np.ndarray:
    """Normalized stratum weights.

    ``"sample-size"`` uses coefficients ``n_h1 n_h2 / n_h``;
    ``"van-elteren"`` uses ``n_h1 n_h2 / (n_h + 1)``.  A sequence is taken as
    custom weights, which must be positive and sum to one.

    >>> strata_weights([(10, 10), (20, 20)]).round(4).tolist()
    [0.3333, 0.6667]
    """
    sizes = [(int(a), int(b)) for a, b in sizes]
    if not sizes:
        raise ValueError("at least one stratum is required")
    if any(a < 1 or b < 1 for a, b in sizes):
        raise ValueError("stratum group sizes must be positive")
    if not isinstance(scheme, str):
        w = np.asarray(scheme, dtype=np.float64)
        if w.shape != (len(sizes),):
            raise ValueError("one custom weight per stratum is required")
        if (w <= 0).any() or not math.isclose(w.sum(), 1.0, rel_tol=0, abs_tol=1e-12):
            raise ValueError("custom weights must be positive and sum to 1")
        return w
    if scheme == "sample-size":
        coef = np.array([a * b / (a + b) for a, b in sizes])
    elif scheme == "van-elteren":
        coef = np.array([a * b / (a + b + 1) for a, b in sizes])
    else:
        raise ValueError(f"unknown weight scheme {scheme!r}")
    return coef / coef.sum()


def adjusted_wp(sample: TwoSample, cov: CovariatePair, alpha: float = 0.05) -> Estimate:
    """Win proportion adjusted for a numeric covariate's group imbalance."""
    props = individual_proportions(sample)
    return _adjusted_from(props, cov.moments(props), alpha, "adjusted")


def _adjusted_from(props: IndividualProportions, m: CovariateMoments, alpha: float,
                   method: str) -> Estimate:
    if m.var_mean_diff <= 0.0:
        raise DegenerateSampleError("constant covariate")
    slope = m.cov_with_theta / m.var_mean_diff
    beta = props.theta_hat - m.mean_diff * slope
    var = variance_theta(props) - m.cov_with_theta * slope
    if not var > 0.0:
        raise DegenerateSampleError("covariance exceeds variance bound")
    return make_estimate(beta, math.sqrt(var), alpha, props.n1, props.n2, method,
                         theta_crude=props.theta_hat, adjustment=props.theta_hat - beta)


def ordinal_covariate_scores(x1: Sequence[Any], x2: Sequence[Any]) -> CovariatePair:
    """Pooled midranks divided by ``N``.

    The mean difference of these scores (active minus placebo) equals the
    covariate win proportion minus one half, so they carry an ordinal
    covariate into the numeric adjustment.
    """
    pooled = list(x1) + list(x2)
    r = midranks(pooled) / len(pooled)
    return CovariatePair(r[: len(x1)], r[len(x1):])


def adjusted_wp_ordinal_covariate(sample: TwoSample, x1: Sequence[Any], x2: Sequence[Any],
                                  alpha: float = 0.05) -> Estimate:
    """Adjustment for an ordinal covariate via its pairwise win proportion.

    A covariate that is constant across both arms carries no information;
    the crude estimate is returned unchanged in that case.
    """
    scores = ordinal_covariate_scores(x1, x2)
    props = individual_proportions(sample)
    m = scores.moments(props)
    if m.var_mean_diff <= 0.0:
        est = wp_test(sample, alpha)
        return make_estimate(est.estimate, est.se, alpha, sample.n1, sample.n2,
                             "adjusted-ordinal", theta_crude=est.estimate, adjustment=0.0)
    return _adjusted_from(props, m, alpha, "adjusted-ordinal")


@dataclass(frozen=True)
class _StratumStats:
    theta: float
    var_theta: float
    moments: CovariateMoments | None


def _stratum_stats(stratum: Stratum, with_covariate: bool, index: int) -> _StratumStats:
    name = stratum.label or str(index)
    props = individual_proportions(stratum.sample)
    var = variance_theta(props)
    if not var > 0.0:
        raise DegenerateSampleError(f"degenerate stratum {name}: zero variance")
    moments = None
    if with_covariate:
        if stratum.covariate is None:
            raise ValueError(f"stratum {name} has no covariate")
        moments = stratum.covariate.moments(props)
    return _StratumStats(props.theta_hat, var, moments)


def stratified_wp(data: StratifiedData, alpha: float = 0.05) -> Estimate:
    """Weighted combination of per-stratum win proportions."""
    alpha = check_alpha(alpha)
    w = data.resolved_weights()
    stats = [_stratum_stats(s, False, k) for k, s in enumerate(data.strata)]
    theta = float(sum(wk * s.theta for wk, s in zip(w, stats)))
    var = float(sum(wk ** 2 * s.var_theta for wk, s in zip(w, stats)))
    n1 = sum(a for a, _ in data.sizes)
    n2 = sum(b for _, b in data.sizes)
    return make_estimate(theta, math.sqrt(var), alpha, n1, n2, "stratified",
                         weights=w.tolist(), strata=data.labels(),
                         theta_strata=[s.theta for s in stats])


def adjusted_stratified_wp(data: StratifiedData, alpha: float = 0.05) -> Estimate:
    """Stratify the win proportion and the covariate difference, then adjust once."""
    alpha = check_alpha(alpha)
    w = data.resolved_weights()
    stats = [_stratum_stats(s, True, k) for k, s in enumerate(data.strata)]
    theta = sum(wk * s.theta for wk, s in zip(w, stats))
    xdiff = sum(wk * s.moments.mean_diff for wk, s in zip(w, stats))
    var_theta = sum(wk ** 2 * s.var_theta for wk, s in zip(w, stats))
    var_x = sum(wk ** 2 * s.moments.var_mean_diff for wk, s in zip(w, stats))
    cov = sum(wk ** 2 * s.moments.cov_with_theta for wk, s in zip(w, stats))
    if var_x <= 0.0:
        raise DegenerateSampleError("constant covariate across strata")
    beta = theta - xdiff / var_x * cov
    var = var_theta - cov ** 2 / var_x
    if not var > 0.0:
        raise DegenerateSampleError("covariance exceeds variance bound")
    n1 = sum(a for a, _ in data.sizes)
    n2 = sum(b for _, b in data.sizes)
    return make_estimate(float(beta), math.sqrt(var), alpha, n1, n2, "adjusted-stratified",
                         weights=w.tolist(), strata=data.labels(),
                         theta_stratified=float(theta), se_stratified=math.sqrt(var_theta),
                         mean_diff_stratified=float(xdiff))
