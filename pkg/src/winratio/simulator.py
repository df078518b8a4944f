"""Monte-Carlo operating characteristics and convergence paths.

Replicate ``i`` draws from its own stream ``rng.stream(seed, i)``, and
aggregation is a reduction over arrays held in replicate order.  Results are
therefore bit-identical for any number of worker processes.
"""

from __future__ import annotations

import json
import math
import multiprocessing
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from . import __version__, _kernels
from ._common import DegenerateSampleError, check_alpha, critical_value
from .adjust import (
    CovariatePair,
    StratifiedData,
    Stratum,
    adjusted_stratified_wp,
    adjusted_wp,
    stratified_wp,
    strata_weights,
)
from .classical import (
    fligner_policello,
    rank_ancova,
    regression_on_ranks,
    z0_fp_ratio,
    van_elteren,
    wilcoxon_test,
    z0_statistic,
)
from .oracles import DistSpec, theta_true
from .rng import lineage, stream
from .wincore import TwoSample, individual_proportions, variance_theta, wp_test

# Methods producing a win-probability estimate with a CI.
ESTIMATORS = ("wp", "stratified", "adjusted", "adjusted-stratified")
TESTS = ("wilcoxon", "fligner-policello", "z0", "rank-regression", "van-elteren", "rank-ancova")
METHODS = ESTIMATORS + TESTS
_NEEDS_COVARIATE = {"adjusted", "adjusted-stratified", "rank-regression", "rank-ancova"}


@dataclass(frozen=True)
class StratumSpec:
    placebo: DistSpec
    active: DistSpec
    n1: int
    n2: int


@dataclass(frozen=True)
class SimConfig:
    """Simulation settings.

    ``strata`` lists per-stratum designs; when empty a single stratum is
    built from ``placebo``/``active``/``n1``/``n2``.  ``rho`` is the latent
    (Gaussian copula) correlation between the covariate and the response;
    ``covariate_shift`` moves the active arm's covariate mean.
    """

    placebo: DistSpec
    active: DistSpec
    n1: int
    n2: int
    replicates: int = 1000
    alpha: float = 0.05
    seed: int = 0
    methods: tuple[str, ...] = ("wp",)
    strata: tuple[StratumSpec, ...] = ()
    rho: float = 0.0
    covariate_shift: float = 0.0
    workers: int = 1
    n2_sweep: tuple[int, int] | None = None

    def __post_init__(self):
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        if not -1.0 < self.rho < 1.0:
            raise ValueError("rho must lie in (-1, 1)")
        if self.n1 < 1 or self.n2 < 1:
            raise ValueError("group sizes must be positive")
        check_alpha(self.alpha)
        if self.n2_sweep is not None:
            lo, hi = self.n2_sweep
            if not 1 <= lo <= hi:
                raise ValueError("n2_sweep must satisfy 1 <= start <= stop")
            object.__setattr__(self, "n2_sweep", (int(lo), int(hi)))
        unknown = [m for m in self.methods if m not in METHODS]
        if unknown:
            raise ValueError(f"unknown methods {unknown}; choose from {METHODS}")
        object.__setattr__(self, "methods", tuple(self.methods))
        object.__setattr__(self, "strata", tuple(self.strata))

    def stratum_specs(self) -> tuple[StratumSpec, ...]:
        if self.strata:
            return self.strata
        return (StratumSpec(self.placebo, self.active, self.n1, self.n2),)

    @classmethod
    def identical_strata(cls, count: int, **kwargs) -> "SimConfig":
        """Config whose ``count`` strata all repeat the top-level design."""
        spec = StratumSpec(kwargs["placebo"], kwargs["active"], kwargs["n1"], kwargs["n2"])
        return cls(strata=(spec,) * count, **kwargs)


@dataclass(frozen=True)
class MethodCharacteristics:
    rejection_rate: float
    rejection_tolerance: float
    coverage: float | None
    coverage_tolerance: float | None
    mean_estimate: float | None
    mean_se: float | None
    empirical_sd_of_estimates: float | None
    sd_se_ratio: float | None
    target: float | None


@dataclass(frozen=True)
class OperatingCharacteristics:
    methods: dict[str, MethodCharacteristics]
    replicates: int
    alpha: float
    seed_lineage: dict
    inline_checks: dict
    settings: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "tool_version": __version__,
            "replicates": self.replicates,
            "alpha": self.alpha,
            "methods": {k: asdict(v) for k, v in self.methods.items()},
            "seed_lineage": self.seed_lineage,
            "inline_checks": self.inline_checks,
            "settings": self.settings,
        }

    def to_json(self) -> str:
        return dumps(self.to_dict())


def _jsonable(obj):
    if isinstance(obj, float):
        if math.isnan(obj):
            return None
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        return obj
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return _jsonable(obj.item())
    return obj


def dumps(obj) -> str:
    """Deterministic JSON: sorted keys, full float precision, ``"inf"`` for infinity."""
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


# --------------------------------------------------------------------------
# replicate engine
# --------------------------------------------------------------------------


def _draw(spec: StratumSpec, rng: np.random.Generator, rho: float, shift: float, label: str) -> Stratum:
    z1 = rng.standard_normal(spec.n1)
    z2 = rng.standard_normal(spec.n2)
    e1 = rng.standard_normal(spec.n1)
    e2 = rng.standard_normal(spec.n2)
    s = math.sqrt(1.0 - rho ** 2)
    cov = CovariatePair(rho * z1 + s * e1, rho * z2 + s * e2 + shift)
    sample = TwoSample(spec.placebo.from_latent(z1), spec.active.from_latent(z2))
    return Stratum(sample, cov, label)


def _pool(strata: Sequence[Stratum]) -> tuple[TwoSample, CovariatePair]:
    if len(strata) == 1:
        return strata[0].sample, strata[0].covariate
    y1 = np.concatenate([s.sample.y1 for s in strata])
    y2 = np.concatenate([s.sample.y2 for s in strata])
    x1 = np.concatenate([s.covariate.x1 for s in strata])
    x2 = np.concatenate([s.covariate.x2 for s in strata])
    return TwoSample(y1, y2), CovariatePair(x1, x2)


# columns of the per-replicate record
_EST, _SE, _Z, _COVERED = range(4)


def _run_method(method: str, sample: TwoSample, cov: CovariatePair, data: StratifiedData,
                alpha: float, target: float):
    if method in ESTIMATORS:
        if method == "wp":
            est = wp_test(sample, alpha)
        elif method == "stratified":
            est = stratified_wp(data, alpha)
        elif method == "adjusted":
            est = adjusted_wp(sample, cov, alpha)
        else:
            est = adjusted_stratified_wp(data, alpha)
        covered = float(est.ci_lower <= target <= est.ci_upper) if not math.isnan(target) else math.nan
        return est.estimate, est.se, est.z, covered
    if method == "wilcoxon":
        res = wilcoxon_test(sample)
    elif method == "fligner-policello":
        res = fligner_policello(sample)
    elif method == "z0":
        res = z0_statistic(sample)
    elif method == "rank-regression":
        res = regression_on_ranks(sample, cov)
    elif method == "van-elteren":
        res = van_elteren(data)
    else:
        res = rank_ancova(data)
    return math.nan, math.nan, res.statistic, math.nan


def _inline_checks(sample: TwoSample) -> tuple[bool, bool]:
    """Mann-Whitney/rank-sum identity (exact) and the Z0 >= F ordering."""
    active, _ = _kernels.pairwise_scores(sample.y1, sample.y2)
    w = wilcoxon_test(sample).details["W"]
    rank_sum_ok = active.sum() == w - sample.n2 * (sample.n2 + 1) / 2.0
    ordering_ok = z0_fp_ratio(sample) >= 1.0
    return bool(rank_sum_ok), bool(ordering_ok)


def _replicate_block(config: SimConfig, targets: dict, start: int, stop: int):
    specs = config.stratum_specs()
    labels = [f"s{k + 1}" for k in range(len(specs))]
    out = np.full((stop - start, len(config.methods), 4), np.nan)
    checks = np.zeros((stop - start, 2), dtype=bool)
    failures = np.zeros(stop - start, dtype=np.int64)
    for r, idx in enumerate(range(start, stop)):
        rng = stream(config.seed, idx)
        strata = [_draw(s, rng, config.rho, config.covariate_shift, lab) for s, lab in zip(specs, labels)]
        sample, cov = _pool(strata)
        data = StratifiedData(tuple(strata), "sample-size")
        try:
            checks[r] = _inline_checks(sample)
        except DegenerateSampleError:
            checks[r] = True
        for m, method in enumerate(config.methods):
            try:
                out[r, m] = _run_method(method, sample, cov, data, config.alpha, targets[method])
            except DegenerateSampleError:
                failures[r] += 1
    return out, checks, failures


def _targets(config: SimConfig) -> dict:
    specs = config.stratum_specs()
    try:
        thetas = [theta_true(s.placebo, s.active) for s in specs]
    except NotImplementedError:
        return {m: math.nan for m in config.methods}
    w = strata_weights([(s.n1, s.n2) for s in specs], "sample-size")
    pooled = specs[0]
    if len(specs) > 1 and len(set(specs)) != 1:
        crude = math.nan  # pooled target of heterogeneous strata has no closed form here
    else:
        crude = theta_true(pooled.placebo, pooled.active)
    strat = float(np.dot(w, thetas))
    return {m: (strat if m in ("stratified", "adjusted-stratified") else crude) for m in config.methods}


def simulate_replicates(config: SimConfig):
    """Raw per-replicate records ``(values, checks, failures)`` in replicate order."""
    targets = _targets(config)
    reps = config.replicates
    workers = max(1, int(config.workers))
    if workers == 1 or reps < 2 * workers:
        return _replicate_block(config, targets, 0, reps)
    bounds = np.linspace(0, reps, workers + 1).astype(int)
    ctx = multiprocessing.get_context("fork")
    with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as pool:
        futures = [pool.submit(_replicate_block, config, targets, int(a), int(b))
                   for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
        parts = [f.result() for f in futures]
    return tuple(np.concatenate(p) for p in zip(*parts))


def operating_characteristics(config: SimConfig) -> OperatingCharacteristics:
    """Rejection rate, CI coverage and SE calibration for each method."""
    values, checks, failures = simulate_replicates(config)
    if not checks.all():
        bad = np.flatnonzero(~checks.all(axis=1)).tolist()
        raise ArithmeticError(f"inline identity checks failed in replicates {bad[:10]}")
    targets = _targets(config)
    c = critical_value(config.alpha)
    reps = config.replicates
    rej_tol = 3.0 * math.sqrt(config.alpha * (1 - config.alpha) / reps)
    cov_tol = 3.0 * math.sqrt(config.alpha * (1 - config.alpha) / reps)
    result = {}
    for m, method in enumerate(config.methods):
        col = values[:, m, :]
        ok = ~np.isnan(col[:, _Z])
        z = col[ok, _Z]
        rejection = float((np.abs(z) > c).mean()) if z.size else math.nan
        if method in ESTIMATORS:
            est = col[ok, _EST]
            se = col[ok, _SE]
            covered = col[ok, _COVERED]
            coverage = None if np.isnan(covered).any() or not covered.size else float(covered.mean())
            sd = float(est.std(ddof=1)) if est.size > 1 else math.nan
            mean_se = float(se.mean())
            result[method] = MethodCharacteristics(
                rejection, rej_tol, coverage, cov_tol if coverage is not None else None,
                float(est.mean()), mean_se, sd, sd / mean_se, targets[method],
            )
        else:
            result[method] = MethodCharacteristics(rejection, rej_tol, None, None, None, None, None, None, None)
    settings = {
        "strata": [
            {"placebo": asdict(s.placebo), "active": asdict(s.active), "n1": s.n1, "n2": s.n2}
            for s in config.stratum_specs()
        ],
        "rho": config.rho,
        "covariate_shift": config.covariate_shift,
        "methods": list(config.methods),
    }
    inline = {
        "mann_whitney_rank_sum_identity": "passed in every replicate",
        "z0_vs_fligner_policello_ordering": "passed in every replicate",
        "degenerate_replicates": int(failures.sum()),
    }
    return OperatingCharacteristics(result, reps, config.alpha, lineage(config.seed), inline, settings)


# --------------------------------------------------------------------------
# convergence
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ConvergencePoint:
    n2: int
    theta_hat: float
    se: float


def convergence_path(placebo: DistSpec, active: DistSpec, n1: int, n2_max: int, seed: int,
                     n2_start: int = 1) -> list[ConvergencePoint]:
    """One seeded sample path of the win proportion as the active arm grows.

    The placebo sample (``n1``) is fixed; the active sample is revealed one
    subject at a time from ``n2_start`` to ``n2_max``.  The standard error is
    NaN while either arm has fewer than two subjects.
    """
    if not 1 <= n2_start <= n2_max:
        raise ValueError("need 1 <= n2_start <= n2_max")
    rng = stream(seed, 0)
    y1 = placebo.sample(rng, n1)
    y2 = active.sample(rng, n2_max)
    path = []
    for n2 in range(n2_start, n2_max + 1):
        props = individual_proportions(TwoSample(y1, y2[:n2]))
        se = math.sqrt(variance_theta(props)) if n2 >= 2 and n1 >= 2 else math.nan
        path.append(ConvergencePoint(n2, props.theta_hat, se))
    return path


def convergence_study(config: SimConfig) -> list[ConvergencePoint]:
    """Convergence path over ``config.n2_sweep`` (or ``1..config.n2``)."""
    start, stop = config.n2_sweep or (1, config.n2)
    return convergence_path(config.placebo, config.active, config.n1, stop, config.seed, start)


def convergence_csv(path: Sequence[ConvergencePoint]) -> str:
    lines = ["n2,theta_hat,se"]
    for p in path:
        lines.append(f"{p.n2},{p.theta_hat!r},{'' if math.isnan(p.se) else repr(p.se)}")
    return "\n".join(lines) + "\n"
