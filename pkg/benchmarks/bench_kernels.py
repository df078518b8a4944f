"""Time the numba kernels against the pure-numpy fallback.

Run with ``python benchmarks/bench_kernels.py [--repeat N]``.  Both backends
are imported side by side, so the ``WINRATIO_DISABLE_NUMBA`` flag does not
matter here.  Parity of the outputs is checked before timing.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from winratio import _kernels

SIZES = ((200, 200), (2000, 2000), (5000, 10000))


def _inputs(n1: int, n2: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    y1 = rng.integers(0, 100, n1).astype(np.float64)
    y2 = rng.integers(0, 100, n2).astype(np.float64)
    return y1, y2, np.zeros(n1, dtype=np.bool_), np.zeros(n2, dtype=np.bool_)


def _best(fn, repeat: int) -> float:
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main(argv=None) -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    if not _kernels.HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")
    impls = {"numba": _kernels.numba_impl, "numpy": _kernels.numpy_impl}
    y1, y2, w1, w2 = _inputs(10, 10)
    for impl in impls.values():  # compile outside the timed region
        impl.pairwise_scores(y1, y2, w1, w2)
        impl.midranks(y1)

    print(f"{'kernel':<16}{'n1':>7}{'n2':>7}{'numba ms':>11}{'numpy ms':>11}{'speedup':>9}")
    for n1, n2 in SIZES:
        y1, y2, w1, w2 = _inputs(n1, n2)
        pooled = np.concatenate([y1, y2])
        a = impls["numba"].pairwise_scores(y1, y2, w1, w2)
        b = impls["numpy"].pairwise_scores(y1, y2, w1, w2)
        assert all(np.array_equal(x, y) for x, y in zip(a, b)), "pairwise backends disagree"
        assert np.array_equal(impls["numba"].midranks(pooled), impls["numpy"].midranks(pooled))
        for kernel, call in (
            ("pairwise_scores", lambda impl: impl.pairwise_scores(y1, y2, w1, w2)),
            ("midranks", lambda impl: impl.midranks(pooled)),
        ):
            t = {name: _best(lambda: call(impl), args.repeat) * 1e3 for name, impl in impls.items()}
            print(f"{kernel:<16}{n1:>7}{n2:>7}{t['numba']:>11.3f}{t['numpy']:>11.3f}{t['numpy'] / t['numba']:>8.1f}x")


if __name__ == "__main__":
    main()
