"""Closed-form win probabilities and Monte-Carlo variance components."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._common import norm_cdf
from .rng import stream

FAMILIES = ("normal", "uniform", "exponential", "bernoulli", "categorical")


@dataclass(frozen=True)
class DistSpec:
    """A response distribution.

    ``normal``: ``mean``, ``sd``.  ``uniform``: ``U[shift, shift + a]``.
    ``exponential``: ``rate``.  ``bernoulli``: success probability ``p``.
    ``categorical``: ``probs`` over the ordered categories ``0 .. K-1``.
    """

    family: str
    mean: float = 0.0
    sd: float = 1.0
    a: float = 1.0
    shift: float = 0.0
    rate: float = 1.0
    p: float = 0.5
    probs: tuple[float, ...] = ()

    def __post_init__(self):
        f = self.family
        if f not in FAMILIES:
            raise ValueError(f"unknown family {f!r}; expected one of {FAMILIES}")
        if f == "normal" and not self.sd > 0:
            raise ValueError("sd must be > 0")
        if f == "uniform" and not self.a > 0:
            raise ValueError("a must be > 0")
        if f == "exponential" and not self.rate > 0:
            raise ValueError("rate must be > 0")
        if f == "bernoulli" and not 0.0 <= self.p <= 1.0:
            raise ValueError("p must lie in [0, 1]")
        if f == "categorical":
            probs = tuple(float(x) for x in self.probs)
            if not probs or any(x < 0 for x in probs) or not math.isclose(sum(probs), 1.0, abs_tol=1e-9):
                raise ValueError("probs must be non-negative and sum to 1")
            object.__setattr__(self, "probs", probs)

    @classmethod
    def normal(cls, mean: float, sd: float) -> "DistSpec":
        return cls("normal", mean=mean, sd=sd)

    @classmethod
    def uniform(cls, a: float, shift: float = 0.0) -> "DistSpec":
        return cls("uniform", a=a, shift=shift)

    @classmethod
    def exponential(cls, rate: float) -> "DistSpec":
        return cls("exponential", rate=rate)

    @classmethod
    def bernoulli(cls, p: float) -> "DistSpec":
        return cls("bernoulli", p=p)

    @classmethod
    def categorical(cls, probs: Sequence[float]) -> "DistSpec":
        return cls("categorical", probs=tuple(probs))

    def from_latent(self, z: np.ndarray) -> np.ndarray:
        """Transform standard-normal draws into draws from this distribution.

        The transform is monotone, so a latent correlation carries over as a
        rank correlation.
        """
        f = self.family
        if f == "normal":
            return self.mean + self.sd * z
        u = norm_cdf(z)
        if f == "uniform":
            return self.shift + self.a * u
        if f == "exponential":
            # upper tail through Phi(-z) keeps precision for large z
            return -np.log(norm_cdf(-z)) / self.rate
        if f == "bernoulli":
            return (u > 1.0 - self.p).astype(np.float64)
        cum = np.cumsum(self.probs)
        cum[-1] = 1.0
        return np.searchsorted(cum, u, side="right").astype(np.float64)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return self.from_latent(rng.standard_normal(n))


def wp_normal(m1: float, s1: float, m2: float, s2: float) -> float:
    """Win probability of ``N(m2, s2^2)`` against ``N(m1, s1^2)``."""
    if not (s1 > 0 and s2 > 0):
        raise ValueError("standard deviations must be positive")
    return norm_cdf((m2 - m1) / math.sqrt(s1 ** 2 + s2 ** 2))


def wp_uniform_shift(a: float, delta: float) -> float:
    """``U[delta, a + delta]`` against ``U[0, a]``."""
    if not a > 0:
        raise ValueError("a must be > 0")
    if not 0.0 <= delta <= a:
        raise ValueError("delta must lie in [0, a]")
    return 0.5 + (2 * a - delta) * delta / (2 * a ** 2)


def wp_exponential(lam: float, phi: float) -> tuple[float, float]:
    """Active survival ``Exp(phi)`` against placebo ``Exp(lam)``: ``(theta, kappa)``."""
    if not (lam > 0 and phi > 0):
        raise ValueError("rates must be positive")
    return lam / (lam + phi), lam / phi


def wp_prop_hazards(hr: float) -> tuple[float, float]:
    """``(theta, kappa)`` when the active/placebo hazard ratio is constant."""
    if not hr > 0:
        raise ValueError("hazard ratio must be positive")
    return 1.0 / (1.0 + hr), 1.0 / hr


def wp_bernoulli(p: float, q: float) -> float:
    """Active success probability ``p`` against placebo ``q``."""
    if not (0.0 <= p <= 1.0 and 0.0 <= q <= 1.0):
        raise ValueError("probabilities must lie in [0, 1]")
    return (p - q) / 2.0 + 0.5


def wp_ordinal_categorical(probs1: Sequence[float], probs2: Sequence[float]) -> float:
    """Active category probabilities ``probs2`` against placebo ``probs1``."""
    p1 = np.asarray(probs1, dtype=np.float64)
    p2 = np.asarray(probs2, dtype=np.float64)
    if p1.shape != p2.shape:
        raise ValueError("probability vectors must cover the same categories")
    below = np.concatenate([[0.0], np.cumsum(p1)[:-1]])
    return float((p2 * below).sum() + 0.5 * (p2 * p1).sum())


def theta_true(placebo: DistSpec, active: DistSpec) -> float:
    """Closed-form win probability for two specs of the same family."""
    if placebo.family != active.family:
        raise NotImplementedError("closed forms need both arms from the same family")
    f = placebo.family
    if f == "normal":
        return wp_normal(placebo.mean, placebo.sd, active.mean, active.sd)
    if f == "uniform":
        if placebo.a != active.a:
            raise NotImplementedError("uniform arms need a common width")
        delta = active.shift - placebo.shift
        if delta >= 0:
            return wp_uniform_shift(placebo.a, delta)
        return 1.0 - wp_uniform_shift(placebo.a, -delta)
    if f == "exponential":
        return wp_exponential(placebo.rate, active.rate)[0]
    if f == "bernoulli":
        return wp_bernoulli(active.p, placebo.p)
    return wp_ordinal_categorical(placebo.probs, active.probs)


def _h(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Win score of ``b`` over ``a``: 1, 1/2 on ties, 0."""
    return (a < b) + 0.5 * (a == b)


_MC_CHUNK = 100_000


def variance_components_mc(placebo: DistSpec, active: DistSpec, draws: int = 1_000_000,
                           seed: int = 0) -> tuple[float, float]:
    """Monte-Carlo ``(sigma10^2, sigma01^2)`` of the win-proportion U-statistic.

    ``sigma10^2`` is the covariance of two comparisons sharing the placebo
    draw, ``sigma01^2`` of two sharing the active draw.  Draws are split into
    fixed-size chunks, each with its own derived stream.
    """
    if draws < 100_000:
        raise ValueError("draws must be at least 1e5")
    sums = np.zeros(5)
    done = 0
    chunk = 0
    while done < draws:
        m = min(_MC_CHUNK, draws - done)
        rng = stream(seed, chunk)
        xi, xi2 = placebo.sample(rng, m), placebo.sample(rng, m)
        eta, eta2 = active.sample(rng, m), active.sample(rng, m)
        a = _h(xi, eta)
        b = _h(xi2, eta)
        c = _h(xi, eta2)
        sums += [a.sum(), b.sum(), c.sum(), (a * b).sum(), (a * c).sum()]
        done += m
        chunk += 1
    ma, mb, mc, mab, mac = sums / draws
    sigma01 = mab - ma * mb
    sigma10 = mac - ma * mc
    return float(sigma10), float(sigma01)


def asymptotic_variance(sigma10: float, sigma01: float, n1: int, n2: int) -> float:
    """``sigma10^2 / lambda + sigma01^2 / (1 - lambda)`` with ``lambda = n1 / N``."""
    lam = n1 / (n1 + n2)
    return sigma10 / lam + sigma01 / (1.0 - lam)
