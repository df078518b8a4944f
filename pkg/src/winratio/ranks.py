"""Midranks and the rank vectors shared by the rank-based estimators."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cmp_to_key
from typing import Any, Sequence

import numpy as np

from . import _kernels


def _compare(a: Any, b: Any) -> int:
    if a == b:
        return 0
    return -1 if a < b else 1


def _is_numeric(values) -> bool:
    if isinstance(values, np.ndarray):
        return values.dtype.kind in "biuf"
    return all(
        isinstance(v, (int, float, np.integer, np.floating)) and not isinstance(v, bool)
        for v in values
    )


def _sorted_runs(values: Sequence[Any]) -> tuple[list[int], list[int]]:
    """Stable comparator sort; returns the index order and tie-run lengths."""
    for v in values:
        if getattr(v, "tie_with_all", False):
            raise ValueError(
                "values that tie with everything have no ranks; use the pairwise path"
            )
    order = sorted(range(len(values)), key=cmp_to_key(lambda i, j: _compare(values[i], values[j])))
    runs = []
    k = 0
    while k < len(order):
        end = k + 1
        while end < len(order) and values[order[end]] == values[order[k]]:
            end += 1
        runs.append(end - k)
        k = end
    return order, runs


def midranks(values) -> np.ndarray:
    """Rank ``values`` giving tied entries the mean of the ranks they span.

    Numeric input takes the compiled kernel; anything else is ranked with its
    own ``<`` / ``==`` so composite outcomes need no numeric coercion.

    >>> midranks([3, 3, 2, 1, 4, 4, 4, 4, 4]).tolist()
    [3.5, 3.5, 2.0, 1.0, 7.0, 7.0, 7.0, 7.0, 7.0]
    """
    if len(values) == 0:
        raise ValueError("empty sample")
    if _is_numeric(values):
        x = np.asarray(values, dtype=np.float64)
        if np.isnan(x).any():
            raise ValueError("NaN is not an ordinal value")
        return _kernels.midranks(x)
    order, runs = _sorted_runs(list(values))
    ranks = np.empty(len(order), dtype=np.float64)
    start = 0
    for length in runs:
        avg = start + (length + 1) / 2.0
        for k in range(start, start + length):
            ranks[order[k]] = avg
        start += length
    return ranks


def ordinal_codes(values: Sequence[Any]) -> np.ndarray:
    """Map totally ordered objects to dense integer codes (as floats).

    Equal objects share a code and the codes preserve the order, so every
    win/tie/loss comparison is unchanged.
    """
    order, runs = _sorted_runs(list(values))
    codes = np.empty(len(order), dtype=np.float64)
    start = 0
    for code, length in enumerate(runs):
        for k in range(start, start + length):
            codes[order[k]] = code
        start += length
    return codes


@dataclass(frozen=True)
class RankVectors:
    """Pooled and within-group midranks of a two-group sample.

    ``combined`` is ordered placebo first, then active.
    """

    combined: np.ndarray
    within_group_1: np.ndarray
    within_group_2: np.ndarray
    n1: int
    n2: int

    @property
    def group_1(self) -> np.ndarray:
        return self.combined[: self.n1]

    @property
    def group_2(self) -> np.ndarray:
        return self.combined[self.n1 :]

    @property
    def mean_rank_1(self) -> float:
        return float(self.group_1.mean())

    @property
    def mean_rank_2(self) -> float:
        return float(self.group_2.mean())

    @property
    def rank_sum_2(self) -> float:
        """Wilcoxon rank-sum ``W`` of the active group."""
        return float(self.group_2.sum())

    @property
    def var_pooled(self) -> float:
        """Pooled rank variance with an ``N - 1`` denominator."""
        r = self.combined
        n = r.shape[0]
        if n < 2:
            return 0.0
        return float(((r - (n + 1) / 2.0) ** 2).sum() / (n - 1))


def group_ranks(sample) -> RankVectors:
    """Combined and within-group midranks for a :class:`TwoSample`."""
    y1, y2 = sample.y1, sample.y2
    if sample.has_universal_ties:
        raise ValueError("ranks are undefined when some values tie with everything")
    combined = _kernels.midranks(np.concatenate([y1, y2]))
    return RankVectors(
        combined=combined,
        within_group_1=_kernels.midranks(y1),
        within_group_2=_kernels.midranks(y2),
        n1=y1.shape[0],
        n2=y2.shape[0],
    )
