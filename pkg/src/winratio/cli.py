"""Command line front end: ``analyze``, ``nnt-table`` and ``simulate``.

Exit codes: 0 success, 2 data or usage errors, 3 degenerate statistics.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import math
import os
import re
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from . import __version__
from ._common import DegenerateSampleError
from .adjust import (
    WEIGHT_SCHEMES,
    CovariatePair,
    StratifiedData,
    Stratum,
    adjusted_stratified_wp,
    adjusted_wp,
    stratified_wp,
)
from .classical import (
    fligner_policello,
    hodges_lehmann,
    rank_ancova,
    regression_on_ranks,
    wp_wilcoxon_ratio,
    z0_fp_ratio,
    stratified_van_elteren_ratio,
    van_elteren,
    wilcoxon_test,
)
from .composite import DeathStrategy, SubjectRecord, composite_value
from .oracles import FAMILIES, DistSpec
from .simulator import METHODS as SIM_METHODS
from .simulator import SimConfig, convergence_csv, convergence_study, dumps, operating_characteristics
from .wincore import TABLE4_KAPPAS, Estimate, TwoSample, individual_proportions, nnt, nnt_table, win_ratio, wp_test

EXIT_OK, EXIT_DATA, EXIT_DEGENERATE = 0, 2, 3
SEED_ENV = "WINRATIO_SEED"

ANALYZE_METHODS = (
    "wp", "wr", "adjusted", "stratified", "adjusted-stratified", "wilcoxon",
    "fligner-policello", "hodges-lehmann", "rank-regression", "van-elteren", "rank-ancova",
)
_STRATIFIED = {"stratified", "adjusted-stratified", "van-elteren", "rank-ancova"}
_COVARIATE = {"adjusted", "adjusted-stratified", "rank-regression", "rank-ancova"}
COLUMNS = ("subject_id", "group", "response", "stratum", "covariate", "died",
           "death_time", "last_value", "missing")
_COMPOSITE_COLUMNS = {"died", "death_time", "last_value", "missing"}
# '.' decimal separator only: no thousands separators, underscores or words.
_NUMBER = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$")


class DataError(ValueError):
    """Input that violates the CSV schema; the message lists every bad row."""


# --------------------------------------------------------------------------
# CSV ingestion
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Dataset:
    groups: dict[str, tuple[list, list]]         # stratum -> (placebo values, active values)
    covariates: dict[str, tuple[list, list]] | None
    composite: bool


def _parse_number(text: str) -> float:
    if not _NUMBER.match(text):
        raise ValueError(text)
    return float(text)


def _parse_flag(text: str) -> bool:
    if text not in ("0", "1"):
        raise ValueError(text)
    return text == "1"


def read_dataset(path: str | Path, method: str, death_strategy: str = "equal",
                 missing: str = "error") -> Dataset:
    """Read and validate an input CSV for ``method``."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            header = reader.fieldnames
            rows = list(reader)
    except UnicodeDecodeError as exc:
        raise DataError(f"{path}: not valid UTF-8 ({exc.reason})") from None
    if not header:
        raise DataError(f"{path}: header row is missing")
    header = [h.strip() for h in header]
    unknown = [h for h in header if h not in COLUMNS]
    if unknown:
        raise DataError(f"unknown columns {unknown}; allowed columns are {list(COLUMNS)}")
    if len(set(header)) != len(header):
        raise DataError("duplicate column names in header")
    composite = bool(_COMPOSITE_COLUMNS & set(header))
    required = {"subject_id", "group"}
    if not composite:
        required.add("response")
    if method in _STRATIFIED:
        required.add("stratum")
    if method in _COVARIATE:
        required.add("covariate")
    if composite and method == "hodges-lehmann":
        raise DataError("hodges-lehmann needs numeric responses; composite columns are present")
    absent = sorted(required - set(header))
    if absent:
        raise DataError(f"method {method} requires columns {absent}")
    if not rows:
        raise DataError("no data rows")

    errors: list[str] = []
    groups: dict[str, tuple[list, list]] = {}
    covs: dict[str, tuple[list, list]] = {}
    use_strata = method in _STRATIFIED
    use_cov = method in _COVARIATE
    for idx, raw in enumerate(rows, start=1):
        row = {k.strip(): (v or "").strip() for k, v in raw.items() if k is not None}
        if None in raw:
            errors.append(f"row {idx}: more fields than header columns")
            continue
        problems = []
        sid = row.get("subject_id", "")
        if not sid:
            problems.append("subject_id is empty")
        g = row.get("group", "")
        if g not in ("0", "1"):
            problems.append(f"group must be 0 or 1, got {g!r}")
        label = row.get("stratum", "") if use_strata else ""
        if use_strata and not label:
            problems.append("stratum is empty")
        x = None
        if use_cov:
            try:
                x = _parse_number(row.get("covariate", ""))
            except ValueError:
                problems.append(f"covariate is not a number: {row.get('covariate', '')!r}")
        value = None
        if composite:
            try:
                value = composite_value(_record_from_row(row, sid), death_strategy, missing == "ties")
            except ValueError as exc:
                problems.append(str(exc))
        else:
            try:
                value = _parse_number(row.get("response", ""))
            except ValueError:
                problems.append(f"response is not a number: {row.get('response', '')!r}")
        if problems:
            errors.append(f"row {idx}: " + "; ".join(problems))
            continue
        arm = int(g)
        groups.setdefault(label, ([], []))[arm].append(value)
        if use_cov:
            covs.setdefault(label, ([], []))[arm].append(x)
    if errors:
        raise DataError(f"{len(errors)} invalid row(s):\n  " + "\n  ".join(errors))
    ordered = sorted(groups)
    return Dataset(
        groups={k: groups[k] for k in ordered},
        covariates={k: covs[k] for k in ordered} if use_cov else None,
        composite=composite,
    )


def _optional_number(row: dict, key: str) -> float | None:
    text = row.get(key, "")
    if text == "":
        return None
    try:
        return _parse_number(text)
    except ValueError:
        raise ValueError(f"{key} is not a number: {text!r}") from None


def _record_from_row(row: dict, sid: str) -> SubjectRecord:
    try:
        died = _parse_flag(row.get("died", "") or "0")
        missing = _parse_flag(row.get("missing", "") or "0")
    except ValueError as exc:
        raise ValueError(f"died/missing must be 0 or 1, got {exc.args[0]!r}") from None
    return SubjectRecord(
        change_at_T=_optional_number(row, "response"),
        died_before_T=died,
        death_time=_optional_number(row, "death_time"),
        last_change_alive=_optional_number(row, "last_value"),
        missing_not_death=missing,
        subject_id=sid,
    )


# --------------------------------------------------------------------------
# analysis dispatch
# --------------------------------------------------------------------------


def _pooled_sample(data: Dataset) -> TwoSample:
    y1 = [v for g in data.groups.values() for v in g[0]]
    y2 = [v for g in data.groups.values() for v in g[1]]
    if not y1 or not y2:
        raise DataError("both groups need at least one subject")
    return TwoSample(y1, y2)


def _pooled_covariate(data: Dataset) -> CovariatePair:
    x1 = [v for g in data.covariates.values() for v in g[0]]
    x2 = [v for g in data.covariates.values() for v in g[1]]
    return CovariatePair(x1, x2)


def _stratified(data: Dataset, weights: str) -> StratifiedData:
    strata = []
    for label, (y1, y2) in data.groups.items():
        if len(y1) < 2 or len(y2) < 2:
            raise DataError(f"stratum {label}: each group needs at least 2 subjects")
        cov = None
        if data.covariates is not None:
            x1, x2 = data.covariates[label]
            cov = CovariatePair(x1, x2)
        strata.append(Stratum(TwoSample(y1, y2), cov, label))
    return StratifiedData(tuple(strata), weights)


def _finite_or_none(x):
    return None if x is None or (isinstance(x, float) and math.isnan(x)) else x


def _diagnostic(fn, *args):
    try:
        return fn(*args)
    except ValueError:  # ranks unavailable (universal ties) or degenerate
        return None


def analyze(data: Dataset, method: str, alpha: float = 0.05, weights: str = "sample-size") -> dict:
    """Run ``method`` on ``data`` and return the report as a dict."""
    sample = _pooled_sample(data)
    report: dict = {
        "method": method,
        "n": {
            "placebo": sample.n1,
            "active": sample.n2,
            "per_stratum": {k: {"placebo": len(a), "active": len(b)}
                            for k, (a, b) in data.groups.items()} if method in _STRATIFIED else {},
        },
        "estimate": {},
        "se": None,
        "ci": None,
        "z": None,
        "p_value": None,
        "diagnostics": {},
    }
    est: Estimate | None = None
    if method in ("wp", "wr"):
        est = wp_test(sample, alpha)
    elif method == "adjusted":
        est = adjusted_wp(sample, _pooled_covariate(data), alpha)
    elif method == "stratified":
        est = stratified_wp(_stratified(data, weights), alpha)
    elif method == "adjusted-stratified":
        est = adjusted_stratified_wp(_stratified(data, weights), alpha)

    if est is not None:
        report["estimate"]["theta"] = est.estimate
        report["se"] = est.se
        report["ci"] = {"lower": est.ci_lower, "upper": est.ci_upper, "alpha": alpha}
        report["z"] = est.z
        report["p_value"] = est.p_value
        wr = win_ratio(est) if est.estimate < 1.0 else None
        report["estimate"]["kappa"] = wr.kappa if wr else math.inf
        if method == "wr" and wr is not None:
            report["estimate"]["kappa_ci"] = {"lower": wr.ci_lower, "upper": wr.ci_upper}
        if est.estimate > 0.5:
            report["estimate"]["nnt"] = nnt(est.estimate)
        if "weights" in est.details:
            report["weights"] = dict(zip(est.details["strata"], est.details["weights"]))
        if "theta_crude" in est.details:
            report["estimate"]["theta_crude"] = est.details["theta_crude"]
    else:
        theta = individual_proportions(sample).theta_hat
        report["estimate"]["theta"] = theta
        report["estimate"]["kappa"] = math.inf if theta >= 1.0 else theta / (1.0 - theta)
        if method == "hodges-lehmann":
            report["estimate"]["shift"] = hodges_lehmann(sample)
        else:
            if method == "wilcoxon":
                res = wilcoxon_test(sample)
            elif method == "fligner-policello":
                res = fligner_policello(sample)
            elif method == "rank-regression":
                res = regression_on_ranks(sample, _pooled_covariate(data))
            elif method == "van-elteren":
                res = van_elteren(_stratified(data, "van-elteren"))
            else:
                res = rank_ancova(_stratified(data, "van-elteren"))
            report["z"] = res.statistic
            report["p_value"] = res.p_value

    diag = report["diagnostics"]
    if method in ("wp", "wr", "wilcoxon"):
        diag["theorem4_ratio"] = _diagnostic(wp_wilcoxon_ratio, sample)
    if method in ("wp", "wr", "fligner-policello"):
        diag["theorem6_ratio"] = _diagnostic(z0_fp_ratio, sample)
    if method in ("stratified", "van-elteren"):
        diag["theorem11_ratio"] = _diagnostic(stratified_van_elteren_ratio, _stratified(data, weights))
    report["diagnostics"] = {k: v for k, v in diag.items() if v is not None}
    return report


def render_table(report: dict) -> str:
    """Estimate, CI and p-value in a compact fixed-width table."""
    def f(x, fmt="{:.4f}"):
        if x is None:
            return "-"
        if isinstance(x, float) and math.isinf(x):
            return "inf"
        return fmt.format(x)

    est = report["estimate"]
    ci = report["ci"]
    level = f"{1 - ci['alpha']:.0%} CI" if ci else "CI"
    p = report["p_value"]
    p_text = "-" if p is None else ("<0.0001" if p < 1e-4 else f"{p:.4f}")
    ci_text = f"({f(ci['lower'])}, {f(ci['upper'])})" if ci else "-"
    lines = [
        f"{'Method':<22}{'Win prob.':>10}  {level:<20}{'P-value':>9}{'Win ratio':>11}",
        f"{report['method']:<22}{f(est.get('theta')):>10}  {ci_text:<20}{p_text:>9}{f(est.get('kappa')):>11}",
    ]
    if "kappa_ci" in est:
        k = est["kappa_ci"]
        lines.append(f"{'win ratio CI':<22}{'':>10}  ({f(k['lower'])}, {f(k['upper'])})")
    if "shift" in est:
        lines.append(f"{'Hodges-Lehmann shift':<22}{f(est['shift']):>10}")
    if "nnt" in est:
        lines.append(f"{'NNT':<22}{est['nnt']:>10}")
    if report.get("weights"):
        w = ", ".join(f"{k}={v:.4f}" for k, v in report["weights"].items())
        lines.append(f"{'stratum weights':<22}{w}")
    lines.append(f"n placebo={report['n']['placebo']}, n active={report['n']['active']}")
    return "\n".join(lines)


# --------------------------------------------------------------------------
# simulation config
# --------------------------------------------------------------------------


class ConfigError(ValueError):
    """Invalid simulation config; the message starts with the field path."""


_SECTIONS = {
    "simulation": {"seed", "replicates", "alpha", "methods", "workers", "strata", "n1", "n2", "n2_sweep"},
    "placebo": {"family", "mean", "sd", "a", "shift", "rate", "p", "probs"},
    "active": {"family", "mean", "sd", "a", "shift", "rate", "p", "probs"},
    "covariate": {"rho", "shift"},
}


def _get(cp, section, key, conv, default=None, required=False):
    path = f"[{section}].{key}"
    if not cp.has_option(section, key):
        if required:
            raise ConfigError(f"{path}: required field is missing")
        return default
    text = cp.get(section, key).strip()
    try:
        return conv(text)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: invalid value {text!r} ({exc})") from None


def _float_list(text: str) -> tuple[float, ...]:
    return tuple(float(t) for t in text.split(",") if t.strip())


def _dist(cp, section) -> DistSpec:
    if not cp.has_section(section):
        raise ConfigError(f"[{section}]: required section is missing")
    family = _get(cp, section, "family", str, required=True)
    if family not in FAMILIES:
        raise ConfigError(f"[{section}].family: must be one of {list(FAMILIES)}")
    kwargs = {}
    for key in ("mean", "sd", "a", "shift", "rate", "p"):
        v = _get(cp, section, key, float)
        if v is not None:
            kwargs[key] = v
    probs = _get(cp, section, "probs", _float_list)
    if probs is not None:
        kwargs["probs"] = probs
    try:
        return DistSpec(family, **kwargs)
    except ValueError as exc:
        raise ConfigError(f"[{section}]: {exc}") from None


@dataclass(frozen=True)
class SimulationPlan:
    config: SimConfig
    run_oc: bool
    run_convergence: bool


def load_sim_config(path: str | Path, workers: int | None = None) -> SimulationPlan:
    """Parse an INI simulation config (grammar in ``data/CONFIG_FORMAT.md``)."""
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    for section in cp.sections():
        if section not in _SECTIONS:
            raise ConfigError(f"[{section}]: unknown section")
        for key in cp.options(section):
            if key not in _SECTIONS[section]:
                raise ConfigError(f"[{section}].{key}: unknown field")
    if not cp.has_section("simulation"):
        raise ConfigError("[simulation]: required section is missing")
    s = "simulation"
    seed = _get(cp, s, "seed", int)
    if seed is None:
        env = os.environ.get(SEED_ENV, "").strip()
        if not env:
            raise ConfigError(f"[simulation].seed: required (or set {SEED_ENV})")
        try:
            seed = int(env)
        except ValueError:
            raise ConfigError(f"[simulation].seed: {SEED_ENV}={env!r} is not an integer") from None
    if not 0 <= seed < 2 ** 64:
        raise ConfigError("[simulation].seed: must be a 64-bit unsigned integer")
    methods = _get(cp, s, "methods", lambda t: tuple(m.strip() for m in t.split(",") if m.strip()), ())
    bad = [m for m in methods if m not in SIM_METHODS]
    if bad:
        raise ConfigError(f"[simulation].methods: unknown {bad}; choose from {list(SIM_METHODS)}")
    sweep = _get(cp, s, "n2_sweep", lambda t: tuple(int(v) for v in t.split(",")))
    if sweep is not None and len(sweep) != 2:
        raise ConfigError("[simulation].n2_sweep: expected 'start, stop'")
    if not methods and sweep is None:
        raise ConfigError("[simulation]: set methods, n2_sweep or both")
    placebo = _dist(cp, "placebo")
    active = _dist(cp, "active")
    n1 = _get(cp, s, "n1", int, required=True)
    n2 = _get(cp, s, "n2", int, default=sweep[1] if sweep else None, required=sweep is None)
    strata = _get(cp, s, "strata", int, 1)
    if strata < 1:
        raise ConfigError("[simulation].strata: must be >= 1")
    kwargs = dict(
        placebo=placebo, active=active, n1=n1, n2=n2,
        replicates=_get(cp, s, "replicates", int, 1000),
        alpha=_get(cp, s, "alpha", float, 0.05),
        seed=seed,
        methods=methods or ("wp",),
        rho=_get(cp, "covariate", "rho", float, 0.0) if cp.has_section("covariate") else 0.0,
        covariate_shift=_get(cp, "covariate", "shift", float, 0.0) if cp.has_section("covariate") else 0.0,
        workers=workers if workers is not None else _get(cp, s, "workers", int, 1),
        n2_sweep=sweep,
    )
    try:
        config = SimConfig.identical_strata(strata, **kwargs) if strata > 1 else SimConfig(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"[simulation]: {exc}") from None
    return SimulationPlan(config, bool(methods), sweep is not None)


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------


def _fail(message: str, code: int) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def cmd_analyze(args) -> int:
    try:
        data = read_dataset(args.file, args.method, args.death_strategy, args.missing)
        report = analyze(data, args.method, args.alpha, args.weights)
    except DegenerateSampleError as exc:
        return _fail(str(exc), EXIT_DEGENERATE)
    except (ValueError, OSError) as exc:
        return _fail(str(exc), EXIT_DATA)
    report["settings"] = {
        "input": str(args.file),
        "method": args.method,
        "alpha": args.alpha,
        "weights": args.weights,
        "death_strategy": args.death_strategy,
        "missing": args.missing,
    }
    report["tool_version"] = __version__
    text = dumps(report)
    if args.json:
        Path(args.json).write_text(text, encoding="utf-8")
    if args.json == "-" or args.format == "json":
        sys.stdout.write(text)
    else:
        print(render_table(report))
    return EXIT_OK


def cmd_nnt_table(args) -> int:
    kappas = args.kappa or list(TABLE4_KAPPAS)
    try:
        rows = nnt_table(kappas)
    except ValueError as exc:
        return _fail(str(exc), EXIT_DATA)
    if args.format == "json":
        sys.stdout.write(dumps([{"kappa": k, "theta": t, "nnt": n} for k, t, n in rows]))
        return EXIT_OK
    print(f"{'Win ratio':>10}{'Win prob.':>12}{'NNT':>6}")
    for k, t, n in rows:
        print(f"{k:>10g}{t:>12.7f}{n:>6d}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    try:
        plan = load_sim_config(args.config, args.workers)
    except ConfigError as exc:
        return _fail(f"invalid config: {exc}", EXIT_DATA)
    except OSError as exc:
        return _fail(str(exc), EXIT_DATA)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if plan.run_convergence:
        path = convergence_study(plan.config)
        (out / "convergence.csv").write_text(convergence_csv(path), encoding="utf-8")
        last = path[-1]
        print(f"convergence: {len(path)} rows, final n2={last.n2} theta_hat={last.theta_hat:.4f} se={last.se:.4f}")
    if plan.run_oc:
        oc = operating_characteristics(plan.config)
        (out / "operating_characteristics.json").write_text(oc.to_json(), encoding="utf-8")
        for name, m in oc.methods.items():
            cov = "-" if m.coverage is None else f"{m.coverage:.4f}"
            print(f"{name:<22} rejection {m.rejection_rate:.4f} (+/-{m.rejection_tolerance:.4f})  coverage {cov}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="winratio", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="analyze a CSV file")
    a.add_argument("file")
    a.add_argument("--method", required=True, choices=ANALYZE_METHODS)
    a.add_argument("--alpha", type=float, default=0.05)
    a.add_argument("--weights", choices=WEIGHT_SCHEMES, default="sample-size")
    a.add_argument("--death-strategy", choices=[s.value for s in DeathStrategy], default="equal")
    a.add_argument("--missing", choices=("error", "ties"), default="error")
    a.add_argument("--json", metavar="PATH", help="also write the JSON report here ('-' for stdout)")
    a.add_argument("--format", choices=("table", "json"), default="table")
    a.set_defaults(func=cmd_analyze)

    n = sub.add_parser("nnt-table", help="number needed to treat for win ratios")
    n.add_argument("--kappa", type=float, nargs="+", help="win ratios (default: 1.05 .. 3)")
    n.add_argument("--format", choices=("table", "json"), default="table")
    n.set_defaults(func=cmd_nnt_table)

    s = sub.add_parser("simulate", help="run a simulation config")
    s.add_argument("config")
    s.add_argument("--out-dir", default=".")
    s.add_argument("--workers", type=int, default=None, help="override [simulation].workers")
    s.set_defaults(func=cmd_simulate)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "alpha", 0.05) is not None and not 0.0 < getattr(args, "alpha", 0.05) < 1.0:
        return _fail("--alpha must lie in (0, 1)", EXIT_DATA)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
