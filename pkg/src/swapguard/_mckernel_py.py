"""Pure-Python Monte Carlo kernels.

This is the fallback used when the compiled extension is unavailable.  Both
backends draw from the generator in exactly the same order and transform the
raw uniforms with exactly the same arithmetic, so for a given seed they
produce bit-identical results.  In particular, exponential variates are
generated by inverse CDF (``-mean * log1p(-u)``) rather than through the
generator's own ziggurat method, which would consume the stream differently.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import RejectionCapError

BACKEND = "python"

# Gap process codes shared with the compiled kernels.
GAP_FIXED = 0
GAP_JITTER = 1
GAP_EXPONENTIAL = 2
GAP_SINGLE_WINDOW = 3

# Window length codes.
LENGTH_FIXED = 0
LENGTH_EXPONENTIAL = 1


def sample_on_times(gen, horizon, count, block, max_attempts):
    """Draw ``count`` disjoint on-block start times, sorted ascending.

    Starts are uniform on ``[0, horizon - block]``; the whole set is redrawn
    until consecutive starts are at least ``block`` apart (whole-set rejection
    keeps the accepted law exchangeable).  Raises ``RejectionCapError`` after
    ``max_attempts`` rejected sets.
    """
    width = horizon - block
    for _ in range(max_attempts):
        times = np.sort(gen.random(count) * width)
        if count < 2:
            return times
        least_gap = np.diff(times).min()
        if least_gap >= block and least_gap > 0.0:
            return times
    raise RejectionCapError(
        f"no disjoint placement of {count} blocks of length {block} in "
        f"[0, {horizon}] after {max_attempts} attempts"
    )


def sample_attacks(gen, horizon, mean_gap, mean_length, gap_kind, length_kind):
    """Generate attack windows over ``[0, horizon]`` as an ``(n, 2)`` array.

    Windows alternate gap then burst, starting with a gap at time zero.  The
    final window is clipped at the horizon.  ``GAP_SINGLE_WINDOW`` instead
    places one fixed-length window uniformly inside the horizon.
    """
    if gap_kind == GAP_SINGLE_WINDOW:
        start = gen.random() * (horizon - mean_length)
        return np.array([[start, start + mean_length]])

    starts = []
    ends = []
    t = 0.0
    while True:
        if gap_kind == GAP_FIXED:
            gap = mean_gap
        elif gap_kind == GAP_JITTER:
            gap = mean_gap * (0.5 + gen.random())
        elif gap_kind == GAP_EXPONENTIAL:
            gap = -mean_gap * math.log1p(-gen.random())
        else:
            raise ValueError(f"unknown gap kind code {gap_kind}")
        start = t + gap
        if start >= horizon:
            break
        if length_kind == LENGTH_FIXED:
            length = mean_length
        elif length_kind == LENGTH_EXPONENTIAL:
            length = -mean_length * math.log1p(-gen.random())
        else:
            raise ValueError(f"unknown length kind code {length_kind}")
        starts.append(start)
        ends.append(min(start + length, horizon))
        t = start + length
    out = np.empty((len(starts), 2))
    out[:, 0] = starts
    out[:, 1] = ends
    return out


def count_overlaps(on_times, block, windows):
    """Count (on block, attack window) pairs with nonempty intersection.

    Intervals are half open, so touching endpoints do not count.  Returns
    ``(count, first_start, first_offset)`` where ``first_start`` is the start
    of the earliest intersection and ``first_offset`` its offset from the
    containing block's start; both are NaN when the count is zero.
    """
    count = 0
    first_start = math.nan
    first_offset = math.nan
    n = len(on_times)
    if block <= 0.0 or n == 0:
        return 0, first_start, first_offset
    lo = 0
    for window_start, window_end in windows:
        if window_end <= window_start:
            continue
        # Blocks ending at or before this window's start can never intersect
        # this or any later window, so the pointer only moves forward.
        while lo < n and on_times[lo] + block <= window_start:
            lo += 1
        k = lo
        while k < n and on_times[k] < window_end:
            if count == 0:
                first_start = max(on_times[k], window_start)
                first_offset = first_start - on_times[k]
            count += 1
            k += 1
    return count, first_start, first_offset


def single_window_trial(gen, horizon, count, block, length, max_attempts):
    """One trial of the single-window estimator: 1 on overlap, else 0.

    The window position is drawn first, then the schedule, so the trial
    stream layout matches the compiled kernel exactly.
    """
    position = gen.random() * (horizon - length)
    times = sample_on_times(gen, horizon, count, block, max_attempts)
    if block <= 0.0 or length <= 0.0 or count == 0:
        return 0
    hit = np.any((times < position + length) & (times + block > position))
    return int(hit)


def full_trace_trial(gen, horizon, count, block, mean_gap, mean_length,
                     gap_kind, length_kind, max_attempts):
    """One trial of the full-trace estimator: the overlap pair count."""
    times = sample_on_times(gen, horizon, count, block, max_attempts)
    windows = sample_attacks(gen, horizon, mean_gap, mean_length,
                             gap_kind, length_kind)
    overlaps, _, _ = count_overlaps(times, block, windows)
    return overlaps
