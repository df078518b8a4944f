"""Hot numeric kernels.

Every kernel exists twice: a numba ``@njit`` loop version and a vectorized
numpy version.  The numba path is used when numba imports cleanly and the
environment variable ``WINRATIO_DISABLE_NUMBA`` is unset (or ``0``); the
choice is made once at import time.  Both paths are always importable as
``numba_impl`` / ``numpy_impl`` so tests and the benchmark can compare them.
"""

from __future__ import annotations

import os
from types import SimpleNamespace

import numpy as np

# Rows of the comparison matrix materialized at once by the numpy path.
_BLOCK = 2048


def _flag_disabled() -> bool:
    value = os.environ.get("WINRATIO_DISABLE_NUMBA", "").strip().lower()
    return value not in {"", "0", "false", "no"}


# --------------------------------------------------------------------------
# numpy implementations
# --------------------------------------------------------------------------


def _midranks_numpy(x: np.ndarray) -> np.ndarray:
    n = x.shape[0]
    order = np.argsort(x, kind="mergesort")
    xs = x[order]
    new_run = np.empty(n, dtype=bool)
    new_run[0] = True
    np.not_equal(xs[1:], xs[:-1], out=new_run[1:])
    starts = np.flatnonzero(new_run)
    ends = np.append(starts[1:], n)
    # run covers integer ranks start+1 .. end
    avg = (starts + ends + 1) / 2.0
    ranks = np.empty(n, dtype=np.float64)
    ranks[order] = np.repeat(avg, ends - starts)
    return ranks


def _pairwise_scores_numpy(y1, y2, wild1, wild2):
    """Sum of win scores for every active and every placebo subject."""
    n1 = y1.shape[0]
    n2 = y2.shape[0]
    active = np.zeros(n2, dtype=np.float64)
    placebo = np.zeros(n1, dtype=np.float64)
    for lo in range(0, n1, _BLOCK):
        hi = min(lo + _BLOCK, n1)
        a = y1[lo:hi, None]
        s = (y2[None, :] > a).astype(np.float64)
        s += 0.5 * (y2[None, :] == a)
        wild = wild1[lo:hi, None] | wild2[None, :]
        s = np.where(wild, 0.5, s)
        active += s.sum(axis=0)
        placebo[lo:hi] = n2 - s.sum(axis=1)
    return active, placebo


numpy_impl = SimpleNamespace(
    midranks=_midranks_numpy,
    pairwise_scores=_pairwise_scores_numpy,
    name="numpy",
)


# --------------------------------------------------------------------------
# numba implementations
# --------------------------------------------------------------------------

try:  # pragma: no cover - exercised implicitly when numba is present
    import numba

    @numba.njit(cache=True)
    def _midranks_numba(x):
        n = x.shape[0]
        order = np.argsort(x, kind="mergesort")
        ranks = np.empty(n, dtype=np.float64)
        start = 0
        while start < n:
            end = start + 1
            v = x[order[start]]
            while end < n and x[order[end]] == v:
                end += 1
            avg = (start + end + 1) / 2.0
            for k in range(start, end):
                ranks[order[k]] = avg
            start = end
        return ranks

    @numba.njit(cache=True)
    def _pairwise_scores_numba(y1, y2, wild1, wild2):
        n1 = y1.shape[0]
        n2 = y2.shape[0]
        active = np.zeros(n2, dtype=np.float64)
        placebo = np.zeros(n1, dtype=np.float64)
        for i in range(n1):
            a = y1[i]
            wi = wild1[i]
            acc = 0.0
            for j in range(n2):
                if wi or wild2[j]:
                    s = 0.5
                elif y2[j] > a:
                    s = 1.0
                elif y2[j] == a:
                    s = 0.5
                else:
                    s = 0.0
                active[j] += s
                acc += s
            placebo[i] = n2 - acc
        return active, placebo

    numba_impl = SimpleNamespace(
        midranks=_midranks_numba,
        pairwise_scores=_pairwise_scores_numba,
        name="numba",
    )
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    numba_impl = None
    HAVE_NUMBA = False


USING_NUMBA = HAVE_NUMBA and not _flag_disabled()
_impl = numba_impl if USING_NUMBA else numpy_impl


def backend() -> str:
    """Name of the active kernel backend (``"numba"`` or ``"numpy"``)."""
    return _impl.name


def midranks(x: np.ndarray) -> np.ndarray:
    """Midranks of a 1-d float array (1-based, ties averaged)."""
    return _impl.midranks(np.ascontiguousarray(x, dtype=np.float64))


def pairwise_scores(y1, y2, wild1=None, wild2=None):
    """Win-score sums by direct comparison of every cross-group pair.

    Returns ``(active, placebo)`` where ``active[j]`` is the number of wins
    plus half the ties of active subject ``j`` against the placebo group and
    ``placebo[i]`` the same for placebo subject ``i`` against the active
    group.  Pairs involving a ``wild`` element always count as ties.
    """
    y1 = np.ascontiguousarray(y1, dtype=np.float64)
    y2 = np.ascontiguousarray(y2, dtype=np.float64)
    if wild1 is None:
        wild1 = np.zeros(y1.shape[0], dtype=np.bool_)
    if wild2 is None:
        wild2 = np.zeros(y2.shape[0], dtype=np.bool_)
    return _impl.pairwise_scores(
        y1, y2, np.ascontiguousarray(wild1, dtype=np.bool_),
        np.ascontiguousarray(wild2, dtype=np.bool_),
    )
