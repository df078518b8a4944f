"""Exceptions and standard-normal helpers shared by every estimator."""

from __future__ import annotations

import math

import numpy as np
from scipy import special


class DegenerateSampleError(ValueError):
    """A statistic is undefined because its variance estimate is zero."""


def norm_cdf(x):
    """Standard normal distribution function (scalar or array)."""
    out = special.ndtr(x)
    return float(out) if np.ndim(out) == 0 else out


def norm_ppf(p):
    """Standard normal quantile function (scalar or array)."""
    out = special.ndtri(p)
    return float(out) if np.ndim(out) == 0 else out


def critical_value(alpha: float) -> float:
    """``C_alpha``: the ``1 - alpha/2`` standard normal quantile."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha!r}")
    return norm_ppf(1.0 - alpha / 2.0)


def two_sided_p(z: float) -> float:
    """Two-sided normal p-value ``2 * (1 - Phi(|z|))``."""
    if math.isnan(z):
        return math.nan
    # erfc keeps precision far in the tail where 1 - Phi underflows
    return min(1.0, math.erfc(abs(z) / math.sqrt(2.0)))


def check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha!r}")
    return alpha
