"""Benchmark the compiled trial kernels against the pure-Python fallback.

Run as ``python -m swapguard.bench``.  Both backends draw from identical
generator streams, so each case also cross-checks that the compiled kernels
reproduce the fallback exactly before timing them.
"""

from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from . import _mckernel_py

try:
    from . import _mckernel
except ImportError:
    _mckernel = None

_HORIZON = 1000.0
_BLOCK = 2.5
_ON_COUNT = 10
_MEAN_INTERVAL = 50.0
_MEAN_LENGTH = 2.0
_MAX_ATTEMPTS = 10 ** 6


def _stream(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def _case_schedule(kernels, seed: int):
    gen = _stream(seed)
    return kernels.sample_on_times(gen, _HORIZON, _ON_COUNT, _BLOCK,
                                   _MAX_ATTEMPTS)


def _case_single_window(kernels, seed: int):
    gen = _stream(seed)
    return kernels.single_window_trial(gen, _HORIZON, 10, _BLOCK,
                                       _MEAN_LENGTH, _MAX_ATTEMPTS)


def _case_full_trace(kernels, seed: int):
    gen = _stream(seed)
    return kernels.full_trace_trial(gen, _HORIZON, 10, _BLOCK, _MEAN_INTERVAL,
                                    _MEAN_LENGTH,
                                    _mckernel_py.GAP_EXPONENTIAL,
                                    _mckernel_py.LENGTH_FIXED, _MAX_ATTEMPTS)


_CASES = [
    ("sample_on_times", _case_schedule),
    ("single_window_trial", _case_single_window),
    ("full_trace_trial", _case_full_trace),
]


def _check_agreement(case_fn, seed: int) -> None:
    expected = case_fn(_mckernel_py, seed)
    actual = case_fn(_mckernel, seed)
    if isinstance(expected, np.ndarray):
        same = np.array_equal(expected, actual)
    else:
        same = expected == actual
    if not same:
        raise AssertionError(f"backend mismatch: {expected!r} != {actual!r}")


def _time_case(kernels, case_fn, trials: int, repeats: int) -> float:
    """Best-of-``repeats`` wall time per trial, in seconds."""
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        for seed in range(trials):
            case_fn(kernels, seed)
        best = min(best, (time.perf_counter() - start) / trials)
    return best


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="python -m swapguard.bench",
        description="compare the compiled trial kernels with the fallback")
    parser.add_argument("--trials", type=int, default=2000,
                        help="trials per timing pass (default: 2000)")
    parser.add_argument("--repeats", type=int, default=3,
                        help="timing passes per case; best is kept (default: 3)")
    args = parser.parse_args(argv)
    if args.trials < 1 or args.repeats < 1:
        parser.error("--trials and --repeats must be >= 1")

    if _mckernel is None:
        print("compiled backend not available; timing the fallback only")
    else:
        for name, case_fn in _CASES:
            _check_agreement(case_fn, seed=12345)
        print("backends agree on shared streams")

    header = f"{'case':<22}{'python':>14}{'compiled':>14}{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for name, case_fn in _CASES:
        pure = _time_case(_mckernel_py, case_fn, args.trials, args.repeats)
        row = f"{name:<22}{pure * 1e6:>12.2f}us"
        if _mckernel is not None:
            fast = _time_case(_mckernel, case_fn, args.trials, args.repeats)
            row += f"{fast * 1e6:>12.2f}us{pure / fast:>9.1f}x"
        print(row)
    return 0


if __name__ == "__main__":
    sys.exit(main())
