"""Crude win proportion, its standard error, test, win ratio and NNT."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

import numpy as np

from . import _kernels
from ._common import DegenerateSampleError, check_alpha, critical_value, two_sided_p
from .ranks import RankVectors, group_ranks, ordinal_codes, _is_numeric


@dataclass(frozen=True, init=False)
class TwoSample:
    """Placebo responses ``y1`` and active responses ``y2``.

    Numeric responses are stored as float arrays.  Other ordered objects
    (e.g. :class:`~winratio.composite.CompositeValue`) are jointly encoded to
    order-preserving integer codes; objects flagged ``tie_with_all`` are
    recorded in ``wild1`` / ``wild2`` and compare as ties with everything.
    """

    y1: np.ndarray
    y2: np.ndarray
    wild1: np.ndarray
    wild2: np.ndarray
    numeric: bool

    def __init__(self, y1: Sequence[Any], y2: Sequence[Any]):
        if len(y1) < 1 or len(y2) < 1:
            raise ValueError("each group needs at least one observation")
        if _is_numeric(y1) and _is_numeric(y2):
            a = np.asarray(y1, dtype=np.float64).ravel()
            b = np.asarray(y2, dtype=np.float64).ravel()
            if np.isnan(a).any() or np.isnan(b).any():
                raise ValueError("missing responses must be resolved before analysis")
            w1 = np.zeros(a.shape[0], dtype=bool)
            w2 = np.zeros(b.shape[0], dtype=bool)
            numeric = True
        else:
            pooled = list(y1) + list(y2)
            wild = np.array([bool(getattr(v, "tie_with_all", False)) for v in pooled])
            codes = np.zeros(len(pooled), dtype=np.float64)
            ordered = [v for v, w in zip(pooled, wild) if not w]
            if ordered:
                codes[~wild] = ordinal_codes(ordered)
            n1 = len(y1)
            a, b = codes[:n1], codes[n1:]
            w1, w2 = wild[:n1], wild[n1:]
            numeric = False
        object.__setattr__(self, "y1", a)
        object.__setattr__(self, "y2", b)
        object.__setattr__(self, "wild1", w1)
        object.__setattr__(self, "wild2", w2)
        object.__setattr__(self, "numeric", numeric)

    @property
    def n1(self) -> int:
        return self.y1.shape[0]

    @property
    def n2(self) -> int:
        return self.y2.shape[0]

    @property
    def has_universal_ties(self) -> bool:
        return bool(self.wild1.any() or self.wild2.any())

    def swapped(self) -> "TwoSample":
        """The same data with the group roles exchanged."""
        out = object.__new__(TwoSample)
        for name, value in (("y1", self.y2), ("y2", self.y1), ("wild1", self.wild2),
                            ("wild2", self.wild1), ("numeric", self.numeric)):
            object.__setattr__(out, name, value)
        return out


@dataclass(frozen=True)
class IndividualProportions:
    """Placements: ``p`` (active vs placebo) and ``q`` (placebo vs active)."""

    p: np.ndarray
    q: np.ndarray
    theta_hat: float

    @property
    def n1(self) -> int:
        return self.q.shape[0]

    @property
    def n2(self) -> int:
        return self.p.shape[0]

    @property
    def var_active(self) -> float:
        """``var(Y2^0)`` with an ``n2 - 1`` denominator."""
        return float(((self.p - self.theta_hat) ** 2).sum() / (self.n2 - 1))

    @property
    def var_placebo(self) -> float:
        """``var(Y1^0)`` with an ``n1 - 1`` denominator."""
        return float(((self.q - (1.0 - self.theta_hat)) ** 2).sum() / (self.n1 - 1))


@dataclass(frozen=True)
class Estimate:
    """Point estimate of a win probability with normal-theory inference.

    ``z`` tests the value ``null`` (one half unless stated otherwise);
    ``clamped`` records that a CI endpoint was cut back to ``[0, 1]``.
    """

    estimate: float
    se: float
    ci_lower: float
    ci_upper: float
    z: float
    p_value: float
    alpha: float
    n1: int
    n2: int
    method: str = "wp"
    clamped: bool = False
    details: dict = field(default_factory=dict, compare=False)

    def summary(self) -> str:
        level = 1.0 - self.alpha
        p = "p<0.0001" if self.p_value < 1e-4 else f"p={self.p_value:.4f}"
        return (
            f"{self.method}: WP {self.estimate:.4f} (se {self.se:.4f}), "
            f"{level:.0%} CI ({self.ci_lower:.4f}, {self.ci_upper:.4f}), "
            f"z={self.z:.3f}, {p}"
        )


@dataclass(frozen=True)
class WinRatioResult:
    kappa: float
    ci_lower: float
    ci_upper: float
    estimate: Estimate


def make_estimate(theta: float, se: float, alpha: float, n1: int, n2: int,
                  method: str, null: float = 0.5, **details) -> Estimate:
    """Wrap a point estimate and standard error into an :class:`Estimate`."""
    alpha = check_alpha(alpha)
    if not se > 0.0:
        raise DegenerateSampleError("degenerate sample: zero variance")
    c = critical_value(alpha)
    lo, hi = theta - c * se, theta + c * se
    clamped = lo < 0.0 or hi > 1.0
    z = (theta - null) / se
    return Estimate(
        estimate=float(theta),
        se=float(se),
        ci_lower=max(0.0, lo),
        ci_upper=min(1.0, hi),
        z=float(z),
        p_value=two_sided_p(z),
        alpha=alpha,
        n1=int(n1),
        n2=int(n2),
        method=method,
        clamped=clamped,
        details=details,
    )


def win_proportion_pairwise(sample: TwoSample) -> IndividualProportions:
    """Placements by comparing every placebo/active pair directly.

    This is the O(n1*n2) reference path.  It is also the only path when
    some values tie with everything.
    """
    active, placebo = _kernels.pairwise_scores(sample.y1, sample.y2, sample.wild1, sample.wild2)
    p = active / sample.n1
    q = placebo / sample.n2
    return IndividualProportions(p=p, q=q, theta_hat=float(p.mean()))


def placements_from_ranks(ranks: RankVectors) -> IndividualProportions:
    p = (ranks.group_2 - ranks.within_group_2) / ranks.n1
    q = (ranks.group_1 - ranks.within_group_1) / ranks.n2
    return IndividualProportions(p=p, q=q, theta_hat=win_proportion_ranks(ranks))


def individual_proportions(sample: TwoSample) -> IndividualProportions:
    """Placements by the rank route, falling back to pairwise comparison."""
    if sample.has_universal_ties:
        return win_proportion_pairwise(sample)
    return placements_from_ranks(group_ranks(sample))


def win_proportion_ranks(ranks: RankVectors, n1: int | None = None, n2: int | None = None) -> float:
    """``theta_hat = sum_j (R_2j - R~_2j) / (n1 n2)`` from pooled/within ranks."""
    n1 = ranks.n1 if n1 is None else n1
    n2 = ranks.n2 if n2 is None else n2
    return float((ranks.group_2 - ranks.within_group_2).sum() / (n1 * n2))


def variance_theta(props: IndividualProportions) -> float:
    """Squared standard error of the win proportion from the placements.

    Zero is returned for a degenerate sample; callers decide whether that
    is fatal.
    """
    if props.n1 < 2 or props.n2 < 2:
        raise ValueError("variance needs at least 2 per group")
    return props.var_placebo / props.n1 + props.var_active / props.n2


def variance_theta_ranks(ranks: RankVectors) -> float:
    """The same variance written in pooled/within-group ranks only."""
    n1, n2 = ranks.n1, ranks.n2
    if n1 < 2 or n2 < 2:
        raise ValueError("variance needs at least 2 per group")
    d1 = ranks.group_1 - ranks.within_group_1 - ranks.mean_rank_1 + (n1 + 1) / 2.0
    d2 = ranks.group_2 - ranks.within_group_2 - ranks.mean_rank_2 + (n2 + 1) / 2.0
    return float((d1 ** 2).sum() / (n1 * (n1 - 1) * n2 ** 2)
                 + (d2 ** 2).sum() / (n2 * (n2 - 1) * n1 ** 2))


def wp_test(sample: TwoSample, alpha: float = 0.05) -> Estimate:
    """Win proportion with asymptotic CI and the test of ``theta = 1/2``."""
    if sample.n1 < 2 or sample.n2 < 2:
        raise ValueError("variance needs at least 2 per group")
    props = individual_proportions(sample)
    var = variance_theta(props)
    return make_estimate(props.theta_hat, math.sqrt(var), alpha, sample.n1, sample.n2, "wp")


def _odds(x: float) -> float:
    if x >= 1.0:
        return math.inf
    return x / (1.0 - x)


def win_ratio(est: Estimate) -> WinRatioResult:
    """Map a win-probability estimate and its CI through ``x / (1 - x)``."""
    if est.estimate >= 1.0:
        warnings.warn("win proportion is 1: win ratio is infinite", RuntimeWarning, stacklevel=2)
    return WinRatioResult(
        kappa=_odds(est.estimate),
        ci_lower=_odds(est.ci_lower),
        ci_upper=_odds(est.ci_upper),
        estimate=est,
    )


# Relative distance below which 1/(2θ-1) is treated as an integer.  Win
# probabilities are routinely reported to 7 digits (0.5238095 for 22/42).
_NNT_SNAP = 1e-5


def nnt(theta: float) -> int:
    """Number needed to treat, ``ceil(1 / (2 theta - 1))``.

    >>> nnt(0.5412844), nnt(1.0)
    (13, 1)
    """
    theta = float(theta)
    if not theta <= 1.0:
        raise ValueError(f"win probability must not exceed 1, got {theta}")
    if theta <= 0.5:
        raise ValueError("no benefit: NNT undefined")
    raw = 1.0 / (2.0 * theta - 1.0)
    nearest = round(raw)
    if abs(raw - nearest) <= _NNT_SNAP * nearest:
        return int(nearest)
    return int(math.ceil(raw))


TABLE4_KAPPAS = (1.05, 1.1, 1.15, 1.18, 1.2, 1.25, 1.3, 1.35, 1.4, 1.45, 1.5, 2.0, 3.0)


def theta_from_kappa(kappa: float) -> float:
    if math.isinf(kappa):
        return 1.0
    return kappa / (1.0 + kappa)


def nnt_table(kappas: Iterable[float] = TABLE4_KAPPAS) -> list[tuple[float, float, int]]:
    """Rows ``(kappa, theta, NNT)`` for win ratios above one."""
    rows = []
    for kappa in kappas:
        kappa = float(kappa)
        if not kappa > 1.0:
            raise ValueError(f"no benefit: win ratio {kappa} must exceed 1")
        theta = theta_from_kappa(kappa)
        rows.append((kappa, theta, nnt(theta)))
    return rows
