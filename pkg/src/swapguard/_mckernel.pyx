# cython: language_level=3
# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled Monte Carlo kernels.

Bit-compatible with the pure-Python fallback in ``_mckernel_py``: both
backends pull doubles from the generator in the same order and apply the same
arithmetic, so results for a given seed are identical across backends.
Exponential variates use inverse CDF (``-mean * log1p(-u)``) for that reason.
"""

from cpython.pycapsule cimport PyCapsule_GetPointer, PyCapsule_IsValid
from libc.math cimport log1p

import numpy as np

from numpy.random cimport bitgen_t

from .errors import RejectionCapError

BACKEND = "compiled"

GAP_FIXED = 0
GAP_JITTER = 1
GAP_EXPONENTIAL = 2
GAP_SINGLE_WINDOW = 3

LENGTH_FIXED = 0
LENGTH_EXPONENTIAL = 1

cdef enum:
    C_GAP_FIXED = 0
    C_GAP_JITTER = 1
    C_GAP_EXPONENTIAL = 2
    C_GAP_SINGLE_WINDOW = 3

cdef enum:
    C_LENGTH_FIXED = 0
    C_LENGTH_EXPONENTIAL = 1

cdef const char *CAPSULE_NAME = "BitGenerator"


cdef bitgen_t *_bitgen(object gen) except NULL:
    """Extract the raw bit-generator interface from a numpy Generator."""
    capsule = gen.bit_generator.capsule
    if not PyCapsule_IsValid(capsule, CAPSULE_NAME):
        raise ValueError("expected a numpy Generator backed by a BitGenerator")
    return <bitgen_t *> PyCapsule_GetPointer(capsule, CAPSULE_NAME)


cdef bint _fill_on_times(bitgen_t *rng, double *buf, Py_ssize_t count,
                         double horizon, double block,
                         long max_attempts) noexcept nogil:
    """Fill ``buf`` with sorted disjoint block starts; False if the cap is hit.

    Insertion sort keeps the draw order identical to the fallback (which
    draws the whole set and then sorts): values enter in draw order and only
    their placement differs, never the stream.
    """
    cdef double width = horizon - block
    cdef Py_ssize_t i, j
    cdef double v, d
    cdef long attempt
    cdef bint ok
    if count == 0:
        return True
    for attempt in range(max_attempts):
        for i in range(count):
            v = rng.next_double(rng.state) * width
            j = i
            while j > 0 and buf[j - 1] > v:
                buf[j] = buf[j - 1]
                j -= 1
            buf[j] = v
        if count < 2:
            return True
        ok = True
        for i in range(1, count):
            d = buf[i] - buf[i - 1]
            if d < block or d <= 0.0:
                ok = False
                break
        if ok:
            return True
    return False


def sample_on_times(object gen, double horizon, Py_ssize_t count, double block,
                    long max_attempts):
    """Draw ``count`` disjoint on-block start times, sorted ascending."""
    cdef bitgen_t *rng = _bitgen(gen)
    out = np.empty(count, dtype=np.float64)
    cdef double[::1] view = out
    cdef double *ptr = NULL
    cdef bint ok
    if count > 0:
        ptr = &view[0]
    with nogil:
        ok = _fill_on_times(rng, ptr, count, horizon, block, max_attempts)
    if not ok:
        raise RejectionCapError(
            f"no disjoint placement of {count} blocks of length {block} in "
            f"[0, {horizon}] after {max_attempts} attempts"
        )
    return out


def sample_attacks(object gen, double horizon, double mean_gap,
                   double mean_length, int gap_kind, int length_kind):
    """Generate attack windows over ``[0, horizon]`` as an ``(n, 2)`` array."""
    cdef bitgen_t *rng = _bitgen(gen)
    cdef double start, gap, length, t
    if gap_kind == C_GAP_SINGLE_WINDOW:
        start = rng.next_double(rng.state) * (horizon - mean_length)
        single = np.empty((1, 2))
        single[0, 0] = start
        single[0, 1] = start + mean_length
        return single
    if gap_kind not in (C_GAP_FIXED, C_GAP_JITTER, C_GAP_EXPONENTIAL):
        raise ValueError(f"unknown gap kind code {gap_kind}")
    if length_kind not in (C_LENGTH_FIXED, C_LENGTH_EXPONENTIAL):
        raise ValueError(f"unknown length kind code {length_kind}")

    cdef Py_ssize_t cap = 16
    cdef Py_ssize_t n = 0
    buf = np.empty((cap, 2))
    cdef double[:, ::1] view = buf
    t = 0.0
    while True:
        if gap_kind == C_GAP_FIXED:
            gap = mean_gap
        elif gap_kind == C_GAP_JITTER:
            gap = mean_gap * (0.5 + rng.next_double(rng.state))
        else:
            gap = -mean_gap * log1p(-rng.next_double(rng.state))
        start = t + gap
        if start >= horizon:
            break
        if length_kind == C_LENGTH_FIXED:
            length = mean_length
        else:
            length = -mean_length * log1p(-rng.next_double(rng.state))
        if n == cap:
            cap *= 2
            grown = np.empty((cap, 2))
            grown[:n] = buf[:n]
            buf = grown
            view = buf
        view[n, 0] = start
        view[n, 1] = start + length if start + length < horizon else horizon
        t = start + length
        n += 1
    return buf[:n].copy()


def count_overlaps(object on_times, double block, object windows):
    """Count (on block, attack window) pairs with nonempty intersection.

    Same half-open semantics and return convention as the fallback:
    ``(count, first_start, first_offset)`` with NaNs when the count is zero.
    """
    times = np.ascontiguousarray(on_times, dtype=np.float64)
    wins = np.ascontiguousarray(windows, dtype=np.float64)
    cdef long total = 0
    cdef double first_start = float("nan")
    cdef double first_offset = float("nan")
    cdef Py_ssize_t n = times.shape[0]
    if block <= 0.0 or n == 0 or wins.size == 0:
        return 0, first_start, first_offset
    cdef const double[::1] tview = times
    cdef const double[:, ::1] wview = wins
    cdef Py_ssize_t m = wview.shape[0]
    cdef Py_ssize_t lo = 0, k, w
    cdef double window_start, window_end
    with nogil:
        for w in range(m):
            window_start = wview[w, 0]
            window_end = wview[w, 1]
            if window_end <= window_start:
                continue
            while lo < n and tview[lo] + block <= window_start:
                lo += 1
            k = lo
            while k < n and tview[k] < window_end:
                if total == 0:
                    first_start = max(tview[k], window_start)
                    first_offset = first_start - tview[k]
                total += 1
                k += 1
    return total, first_start, first_offset


def single_window_trial(object gen, double horizon, Py_ssize_t count,
                        double block, double length, long max_attempts):
    """One trial of the single-window estimator: 1 on overlap, else 0."""
    cdef bitgen_t *rng = _bitgen(gen)
    scratch = np.empty(count, dtype=np.float64)
    cdef double[::1] view = scratch
    cdef double *ptr = NULL
    cdef double position
    cdef bint ok = True
    cdef int hit = 0
    cdef Py_ssize_t i
    if count > 0:
        ptr = &view[0]
    with nogil:
        position = rng.next_double(rng.state) * (horizon - length)
        ok = _fill_on_times(rng, ptr, count, horizon, block, max_attempts)
        if ok and block > 0.0 and length > 0.0:
            for i in range(count):
                if ptr[i] < position + length and ptr[i] + block > position:
                    hit = 1
                    break
    if not ok:
        raise RejectionCapError(
            f"no disjoint placement of {count} blocks of length {block} in "
            f"[0, {horizon}] after {max_attempts} attempts"
        )
    return hit


def full_trace_trial(object gen, double horizon, Py_ssize_t count,
                     double block, double mean_gap, double mean_length,
                     int gap_kind, int length_kind, long max_attempts):
    """One trial of the full-trace estimator: the overlap pair count."""
    cdef bitgen_t *rng = _bitgen(gen)
    if gap_kind not in (C_GAP_FIXED, C_GAP_JITTER, C_GAP_EXPONENTIAL,
                        C_GAP_SINGLE_WINDOW):
        raise ValueError(f"unknown gap kind code {gap_kind}")
    if length_kind not in (C_LENGTH_FIXED, C_LENGTH_EXPONENTIAL):
        raise ValueError(f"unknown length kind code {length_kind}")
    scratch = np.empty(count, dtype=np.float64)
    cdef double[::1] view = scratch
    cdef double *ptr = NULL
    cdef bint ok = True
    cdef long overlaps = 0
    cdef Py_ssize_t lo = 0, k
    cdef double t, gap, start, length, window_end
    if count > 0:
        ptr = &view[0]
    with nogil:
        ok = _fill_on_times(rng, ptr, count, horizon, block, max_attempts)
        if ok:
            if gap_kind == C_GAP_SINGLE_WINDOW:
                start = rng.next_double(rng.state) * (horizon - mean_length)
                window_end = start + mean_length
                if block > 0.0 and window_end > start:
                    for k in range(count):
                        if ptr[k] < window_end and ptr[k] + block > start:
                            overlaps += 1
            else:
                t = 0.0
                while True:
                    if gap_kind == C_GAP_FIXED:
                        gap = mean_gap
                    elif gap_kind == C_GAP_JITTER:
                        gap = mean_gap * (0.5 + rng.next_double(rng.state))
                    else:
                        gap = -mean_gap * log1p(-rng.next_double(rng.state))
                    start = t + gap
                    if start >= horizon:
                        break
                    if length_kind == C_LENGTH_FIXED:
                        length = mean_length
                    else:
                        length = -mean_length * log1p(-rng.next_double(rng.state))
                    window_end = start + length
                    if window_end > horizon:
                        window_end = horizon
                    t = start + length
                    if window_end <= start or block <= 0.0:
                        continue
                    while lo < count and ptr[lo] + block <= start:
                        lo += 1
                    k = lo
                    while k < count and ptr[k] < window_end:
                        overlaps += 1
                        k += 1
    if not ok:
        raise RejectionCapError(
            f"no disjoint placement of {count} blocks of length {block} in "
            f"[0, {horizon}] after {max_attempts} attempts"
        )
    return overlaps
