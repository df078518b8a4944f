"""Win probability, win ratio and rank tests for two-group ordinal outcomes."""

__version__ = "0.1.0"

from ._common import DegenerateSampleError
from .adjust import (
    CovariatePair,
    StratifiedData,
    Stratum,
    adjusted_stratified_wp,
    adjusted_wp,
    adjusted_wp_ordinal_covariate,
    strata_weights,
    stratified_wp,
)
from .classical import (
    TestResult,
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
from .composite import (
    CompositeValue,
    DeathStrategy,
    SubjectRecord,
    build_composite,
    composite_value,
)
from .oracles import DistSpec, theta_true, variance_components_mc, wp_normal
from .ranks import group_ranks, midranks
from .wincore import (
    Estimate,
    TwoSample,
    WinRatioResult,
    individual_proportions,
    nnt,
    nnt_table,
    variance_theta,
    win_proportion_pairwise,
    win_ratio,
    wp_test,
)

__all__ = [
    "adjusted_stratified_wp",
    "adjusted_wp",
    "adjusted_wp_ordinal_covariate",
    "build_composite",
    "composite_value",
    "CompositeValue",
    "CovariatePair",
    "DeathStrategy",
    "DegenerateSampleError",
    "DistSpec",
    "Estimate",
    "fligner_policello",
    "group_ranks",
    "hodges_lehmann",
    "individual_proportions",
    "midranks",
    "nnt",
    "nnt_table",
    "rank_ancova",
    "regression_on_ranks",
    "strata_weights",
    "stratified_van_elteren_ratio",
    "stratified_wp",
    "StratifiedData",
    "Stratum",
    "SubjectRecord",
    "TestResult",
    "theta_true",
    "TwoSample",
    "van_elteren",
    "variance_components_mc",
    "variance_theta",
    "wilcoxon_test",
    "win_proportion_pairwise",
    "win_ratio",
    "WinRatioResult",
    "wp_normal",
    "wp_test",
    "wp_wilcoxon_ratio",
    "z0_fp_ratio",
    "z0_statistic",
]
