"""Monte Carlo simulation of defense schedules and attack traces.

The sampling itself lives in a kernel backend (compiled when available, pure
Python otherwise; see ``_backend``).  This module owns the public data types,
parameter validation, the per-trial stream discipline, and the estimators.

Reproducibility contract: trial ``i`` of a run with root seed ``s`` always
uses ``Generator(PCG64(SeedSequence((s, i))))``, so results are independent
of chunking and worker count, and individual trials can be replayed in
isolation.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum

import numpy as np

from ._backend import kernels
from .errors import FeasibilityError
from .timing import AttackParams, CycleParams

__all__ = [
    "DEFAULT_MAX_ATTEMPTS",
    "GapKind",
    "LengthKind",
    "Phase",
    "PhasePlan",
    "Interval",
    "OnTimeSchedule",
    "AttackTrace",
    "TrialOutcome",
    "Estimate",
    "trial_stream",
    "sample_on_times",
    "sample_attacks",
    "count_overlaps",
    "estimate_no_overlap_single_window",
    "estimate_expected_overlaps",
]

DEFAULT_MAX_ATTEMPTS = 10 ** 6


class GapKind(Enum):
    """How gaps between attack windows are drawn."""

    FIXED_PERIOD = "fixed-period"
    UNIFORM_JITTER = "uniform-jitter"
    EXPONENTIAL = "exponential-gap"
    SINGLE_WINDOW = "single-window"

    @property
    def code(self) -> int:
        return _GAP_CODES[self]


_GAP_CODES = {
    GapKind.FIXED_PERIOD: kernels.GAP_FIXED,
    GapKind.UNIFORM_JITTER: kernels.GAP_JITTER,
    GapKind.EXPONENTIAL: kernels.GAP_EXPONENTIAL,
    GapKind.SINGLE_WINDOW: kernels.GAP_SINGLE_WINDOW,
}


class LengthKind(Enum):
    """How attack window lengths are drawn."""

    FIXED = "fixed"
    EXPONENTIAL = "exponential"

    @property
    def code(self) -> int:
        return _LENGTH_CODES[self]


_LENGTH_CODES = {
    LengthKind.FIXED: kernels.LENGTH_FIXED,
    LengthKind.EXPONENTIAL: kernels.LENGTH_EXPONENTIAL,
}


class Phase(Enum):
    """Steps inside one on block, in chronological order."""

    RESET = "reset"
    SWAP_IN = "swap-in"
    ONLINE = "online"
    SWAP_OUT = "swap-out"


@dataclass(frozen=True)
class PhasePlan:
    """Chronology of one on block: reset, swap in, online, swap out.

    Offsets are measured from the block start.  The payload sits in the data
    registers from the completion of the swap-in step to the end of the
    block; before that the data registers hold freshly reset junk.
    """

    cycle: CycleParams

    @property
    def boundaries(self) -> tuple[float, float, float, float]:
        """Cumulative end offsets of reset, swap-in, online, swap-out."""
        reset_end = self.cycle.reset
        swap_in_end = reset_end + self.cycle.swap
        online_end = swap_in_end + self.cycle.online
        return (reset_end, swap_in_end, online_end, online_end + self.cycle.swap)

    @property
    def payload_arrival(self) -> float:
        """Offset at which the payload lands in the data registers."""
        return self.cycle.reset + self.cycle.swap

    def phase_at(self, offset: float) -> Phase:
        """Phase active at ``offset`` from the block start (half open)."""
        reset_end, swap_in_end, online_end, total = self.boundaries
        if not 0.0 <= offset < total:
            raise ValueError(
                f"offset {offset!r} outside the block [0, {total})")
        if offset < reset_end:
            return Phase.RESET
        if offset < swap_in_end:
            return Phase.SWAP_IN
        if offset < online_end:
            return Phase.ONLINE
        return Phase.SWAP_OUT

    def payload_present(self, offset: float) -> bool:
        """Whether the payload is in the data registers at ``offset``."""
        return offset >= self.payload_arrival


@dataclass(frozen=True)
class Interval:
    """Half-open interval ``[start, end)``."""

    start: float
    end: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.start) and math.isfinite(self.end)):
            raise ValueError("interval endpoints must be finite")
        if self.end < self.start:
            raise ValueError(f"end {self.end!r} precedes start {self.start!r}")

    @property
    def length(self) -> float:
        return self.end - self.start

    def contains(self, t: float) -> bool:
        return self.start <= t < self.end

    def overlaps(self, other: "Interval") -> bool:
        """Nonempty intersection; touching endpoints do not overlap."""
        return max(self.start, other.start) < min(self.end, other.end)


def _freeze(array: np.ndarray) -> np.ndarray:
    out = np.array(array, dtype=np.float64, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class OnTimeSchedule:
    """Sorted, disjoint on-block start times inside ``[0, horizon]``."""

    horizon: float
    cycle: CycleParams
    on_times: np.ndarray

    def __post_init__(self) -> None:
        if not (math.isfinite(self.horizon) and self.horizon > 0):
            raise ValueError(f"horizon must be > 0, got {self.horizon!r}")
        times = _freeze(np.atleast_1d(np.asarray(self.on_times, dtype=np.float64)))
        if times.ndim != 1:
            raise ValueError("on_times must be one-dimensional")
        object.__setattr__(self, "on_times", times)
        block = self.cycle.duration
        if times.size:
            if times[0] < 0.0:
                raise ValueError("on times must be >= 0")
            if times[-1] > self.horizon - block:
                raise ValueError("blocks must end by the horizon")
            if times.size > 1:
                gaps = np.diff(times)
                if gaps.min() < block or gaps.min() <= 0.0:
                    raise ValueError(
                        "on times must be strictly increasing with disjoint blocks")

    @property
    def count(self) -> int:
        return int(self.on_times.size)

    def block_bounds(self) -> np.ndarray:
        """Blocks as an ``(n, 2)`` array of ``[start, end)`` rows."""
        return np.column_stack((self.on_times, self.on_times + self.cycle.duration))

    def blocks(self) -> tuple[Interval, ...]:
        return tuple(Interval(float(t), float(t + self.cycle.duration))
                     for t in self.on_times)


@dataclass(frozen=True, eq=False)
class AttackTrace:
    """Disjoint attack windows inside ``[0, horizon]``, sorted by start."""

    horizon: float
    windows: np.ndarray
    gap_kind: GapKind
    length_kind: LengthKind
    params: AttackParams | None = None

    def __post_init__(self) -> None:
        if not (math.isfinite(self.horizon) and self.horizon > 0):
            raise ValueError(f"horizon must be > 0, got {self.horizon!r}")
        windows = np.asarray(self.windows, dtype=np.float64)
        if windows.size == 0:
            windows = windows.reshape(0, 2)
        if windows.ndim != 2 or windows.shape[1] != 2:
            raise ValueError("windows must be an (n, 2) array")
        windows = _freeze(windows)
        object.__setattr__(self, "windows", windows)
        if windows.shape[0] == 0:
            return
        if np.any(windows[:, 1] < windows[:, 0]):
            raise ValueError("window ends must not precede starts")
        if windows[0, 0] < 0.0 or windows[-1, 1] > self.horizon:
            raise ValueError("windows must lie inside [0, horizon]")
        if np.any(windows[1:, 0] < windows[:-1, 1]):
            raise ValueError("windows must be sorted and pairwise disjoint")

    @property
    def count(self) -> int:
        return int(self.windows.shape[0])

    def intervals(self) -> tuple[Interval, ...]:
        return tuple(Interval(float(s), float(e)) for s, e in self.windows)


@dataclass(frozen=True)
class TrialOutcome:
    """Overlap summary for one (schedule, trace) pair."""

    overlap_count: int
    first_overlap: float | None
    hit_phase: Phase | None

    def __post_init__(self) -> None:
        if self.overlap_count < 0:
            raise ValueError("overlap_count must be >= 0")
        has_detail = self.first_overlap is not None and self.hit_phase is not None
        if (self.overlap_count > 0) != has_detail:
            raise ValueError(
                "first_overlap and hit_phase must be set exactly when overlaps exist")

    @property
    def catastrophic(self) -> bool:
        return self.overlap_count > 0


@dataclass(frozen=True)
class Estimate:
    """A Monte Carlo point estimate with its standard error."""

    value: float
    stderr: float
    trials: int


def trial_stream(seed: int, index: int) -> np.random.Generator:
    """Independent generator for trial ``index`` of a run seeded with ``seed``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed, index))))


def _as_generator(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.PCG64(seed))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def _check_feasible(horizon: float, count: int, block: float) -> None:
    """Reject block sets that cannot be disjointly placed (or only just barely).

    ``count * block > horizon`` cannot fit at all; an exact fit with two or
    more blocks admits only a measure-zero set of placements, which rejection
    sampling would never find.
    """
    if count < 0:
        raise ValueError(f"count must be >= 0, got {count}")
    if count == 0:
        return
    total = count * block
    if total > horizon or (count >= 2 and total == horizon):
        raise FeasibilityError(
            f"{count} disjoint blocks of length {block} cannot be placed in "
            f"[0, {horizon}]")


def sample_on_times(seed, horizon: float, count: int, cycle: CycleParams, *,
                    max_attempts: int = DEFAULT_MAX_ATTEMPTS) -> OnTimeSchedule:
    """Draw a schedule of ``count`` disjoint on blocks uniformly in the horizon.

    ``seed`` may be an int, a ``SeedSequence``, or an existing ``Generator``
    (which is consumed in place).  Block starts are uniform on
    ``[0, horizon - cycle.duration]`` conditioned on pairwise disjointness,
    implemented by whole-set rejection.
    """
    if not (math.isfinite(horizon) and horizon > 0):
        raise ValueError(f"horizon must be > 0, got {horizon!r}")
    block = cycle.duration
    _check_feasible(horizon, count, block)
    gen = _as_generator(seed)
    times = kernels.sample_on_times(gen, horizon, count, block, max_attempts)
    return OnTimeSchedule(horizon=horizon, cycle=cycle, on_times=times)


def sample_attacks(seed, horizon: float, params: AttackParams,
                   gap_kind: GapKind = GapKind.EXPONENTIAL,
                   length_kind: LengthKind = LengthKind.FIXED) -> AttackTrace:
    """Draw one attack trace over ``[0, horizon]``.

    Windows renew as gap then burst from time zero; the last window is
    clipped at the horizon.  ``GapKind.SINGLE_WINDOW`` instead places exactly
    one window of length ``params.mean_length`` uniformly (its
    ``mean_interval`` is ignored and the length kind must be fixed).
    """
    if not (math.isfinite(horizon) and horizon > 0):
        raise ValueError(f"horizon must be > 0, got {horizon!r}")
    if gap_kind is GapKind.SINGLE_WINDOW:
        if params.mean_length > horizon:
            raise ValueError("single-window length must not exceed the horizon")
        if length_kind is not LengthKind.FIXED:
            raise ValueError("single-window traces use a fixed length")
    gen = _as_generator(seed)
    windows = kernels.sample_attacks(gen, horizon, params.mean_interval,
                                     params.mean_length, gap_kind.code,
                                     length_kind.code)
    return AttackTrace(horizon=horizon, windows=windows, gap_kind=gap_kind,
                       length_kind=length_kind, params=params)


def count_overlaps(schedule: OnTimeSchedule, trace: AttackTrace) -> TrialOutcome:
    """Exact overlap count between a schedule's blocks and a trace's windows.

    Every (block, window) pair with nonempty intersection counts once.
    Intervals are half open, so touching endpoints never count.  The outcome
    also carries the earliest intersection start and the phase it lands in.
    """
    if schedule.horizon != trace.horizon:
        raise ValueError(
            f"schedule horizon {schedule.horizon} != trace horizon {trace.horizon}")
    total, first_start, first_offset = kernels.count_overlaps(
        schedule.on_times, schedule.cycle.duration, trace.windows)
    if total == 0:
        return TrialOutcome(overlap_count=0, first_overlap=None, hit_phase=None)
    phase = PhasePlan(schedule.cycle).phase_at(first_offset)
    return TrialOutcome(overlap_count=int(total), first_overlap=float(first_start),
                        hit_phase=phase)


def _chunk_bounds(trials: int, workers: int) -> list[tuple[int, int]]:
    """Fixed chunk boundaries, independent of scheduling order."""
    workers = max(1, min(workers, trials))
    base, extra = divmod(trials, workers)
    bounds = []
    start = 0
    for w in range(workers):
        stop = start + base + (1 if w < extra else 0)
        bounds.append((start, stop))
        start = stop
    return bounds


def _run_chunked(worker_fn, trials: int, workers: int):
    """Run ``worker_fn(start, stop)`` over fixed chunks; reduce in chunk order."""
    bounds = _chunk_bounds(trials, workers)
    if len(bounds) == 1:
        return [worker_fn(*bounds[0])]
    with ThreadPoolExecutor(max_workers=len(bounds)) as pool:
        futures = [pool.submit(worker_fn, start, stop) for start, stop in bounds]
        return [f.result() for f in futures]


def estimate_no_overlap_single_window(
        seed: int, horizon: float, count: int, cycle: CycleParams,
        attack_length: float, trials: int, *, workers: int = 1,
        max_attempts: int = DEFAULT_MAX_ATTEMPTS) -> Estimate:
    """Estimate the probability that one uniform window misses every block.

    Each trial draws a window position uniformly on
    ``[0, horizon - attack_length]``, then a fresh schedule, and scores a miss
    when no block intersects the window.  Counts are accumulated exactly, so
    the result is identical for any ``workers`` value.
    """
    if not (math.isfinite(horizon) and horizon > 0):
        raise ValueError(f"horizon must be > 0, got {horizon!r}")
    if not 0.0 <= attack_length <= horizon:
        raise ValueError("attack_length must lie in [0, horizon]")
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    block = cycle.duration
    _check_feasible(horizon, count, block)

    def run_chunk(start: int, stop: int) -> int:
        hits = 0
        for index in range(start, stop):
            gen = trial_stream(seed, index)
            hits += kernels.single_window_trial(gen, horizon, count, block,
                                                attack_length, max_attempts)
        return hits

    overlapped = sum(_run_chunked(run_chunk, trials, workers))
    misses = trials - overlapped
    p_hat = misses / trials
    stderr = math.sqrt(p_hat * (1.0 - p_hat) / trials)
    return Estimate(value=p_hat, stderr=stderr, trials=trials)


def estimate_expected_overlaps(
        seed: int, horizon: float, count: int, cycle: CycleParams,
        params: AttackParams, gap_kind: GapKind = GapKind.EXPONENTIAL,
        length_kind: LengthKind = LengthKind.FIXED, trials: int = 10 ** 4, *,
        workers: int = 1,
        max_attempts: int = DEFAULT_MAX_ATTEMPTS) -> Estimate:
    """Estimate the mean (block, window) overlap count per horizon.

    Each trial draws a fresh schedule and a fresh attack trace and counts the
    overlapping pairs.  Counts are accumulated exactly (integer sums), so the
    result is identical for any ``workers`` value.
    """
    if not (math.isfinite(horizon) and horizon > 0):
        raise ValueError(f"horizon must be > 0, got {horizon!r}")
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    if gap_kind is GapKind.SINGLE_WINDOW:
        if params.mean_length > horizon:
            raise ValueError("single-window length must not exceed the horizon")
        if length_kind is not LengthKind.FIXED:
            raise ValueError("single-window traces use a fixed length")
    block = cycle.duration
    _check_feasible(horizon, count, block)

    def run_chunk(start: int, stop: int) -> tuple[int, int]:
        total = 0
        total_sq = 0
        for index in range(start, stop):
            gen = trial_stream(seed, index)
            overlaps = kernels.full_trace_trial(
                gen, horizon, count, block, params.mean_interval,
                params.mean_length, gap_kind.code, length_kind.code,
                max_attempts)
            total += overlaps
            total_sq += overlaps * overlaps
        return total, total_sq

    partials = _run_chunked(run_chunk, trials, workers)
    total = sum(p[0] for p in partials)
    total_sq = sum(p[1] for p in partials)
    mean = total / trials
    if trials > 1:
        variance = max(0.0, (total_sq - trials * mean * mean) / (trials - 1))
        stderr = math.sqrt(variance / trials)
    else:
        stderr = 0.0
    return Estimate(value=mean, stderr=stderr, trials=trials)
