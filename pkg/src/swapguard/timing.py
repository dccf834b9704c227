"""Closed-form timing analysis for a randomly scheduled defense cycle.

A network node runs short "on" cycles at random times inside a long horizon
``[0, T]``.  Each cycle lasts ``tau = online + 2*swap + reset`` time units.
An attacker fires bursts of mean length ``delta`` separated by gaps of mean
length ``theta``.  A burst that overlaps an on cycle is catastrophic; the
functions here give the probability and expected count of such overlaps, and
the budget of on cycles that keeps the overlap risk small.

All probabilities are clamped to ``[0, 1]`` so downstream code never sees a
rounding artifact outside the unit interval.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "CycleParams",
    "AttackParams",
    "HorizonParams",
    "cycle_duration",
    "window_miss_probability",
    "total_miss_probability",
    "catastrophe_probability",
    "catastrophe_probability_limit",
    "expected_overlap_count",
    "on_time_bound",
    "max_safe_on_count",
]


def _require_finite(name: str, value: float) -> None:
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value!r}")


def _require_nonnegative(name: str, value: float) -> None:
    _require_finite(name, value)
    if value < 0:
        raise ValueError(f"{name} must be >= 0, got {value!r}")


def _require_positive(name: str, value: float) -> None:
    _require_finite(name, value)
    if value <= 0:
        raise ValueError(f"{name} must be > 0, got {value!r}")


def _clamp01(value: float) -> float:
    return min(1.0, max(0.0, value))


@dataclass(frozen=True)
class CycleParams:
    """Durations of the steps inside one on cycle.

    ``online`` is the useful communication window, ``swap`` the duration of
    each of the two payload swaps (in and out), and ``reset`` the state
    re-initialization that opens the cycle.  All durations are nonnegative;
    a zero total is allowed here and rejected by the consumers (samplers,
    protocol runs) that need a positive cycle.
    """

    online: float
    swap: float
    reset: float

    def __post_init__(self) -> None:
        _require_nonnegative("online", self.online)
        _require_nonnegative("swap", self.swap)
        _require_nonnegative("reset", self.reset)

    @property
    def duration(self) -> float:
        """Total cycle length ``online + 2*swap + reset``."""
        return self.online + 2.0 * self.swap + self.reset


@dataclass(frozen=True)
class AttackParams:
    """Burst process parameters: mean gap between bursts and mean burst length."""

    mean_interval: float
    mean_length: float

    def __post_init__(self) -> None:
        _require_positive("mean_interval", self.mean_interval)
        _require_positive("mean_length", self.mean_length)


@dataclass(frozen=True)
class HorizonParams:
    """Run horizon and the number of on cycles scheduled inside it."""

    total_time: float
    on_count: int

    def __post_init__(self) -> None:
        _require_positive("total_time", self.total_time)
        if not isinstance(self.on_count, int) or isinstance(self.on_count, bool):
            raise ValueError(f"on_count must be an int, got {self.on_count!r}")
        if self.on_count < 0:
            raise ValueError(f"on_count must be >= 0, got {self.on_count}")

    @property
    def density(self) -> float:
        """On cycles per unit time, ``on_count / total_time``."""
        return self.on_count / self.total_time


def cycle_duration(cycle: CycleParams) -> float:
    """Total duration of one cycle: ``online + 2*swap + reset``."""
    return cycle.duration


def window_miss_probability(horizon: float, attack_length: float,
                            cycle_length: float) -> float:
    """Probability that one attack window misses one uniformly placed cycle.

    A cycle starting uniformly in ``[0, horizon]`` collides with a fixed
    window of length ``attack_length`` unless its start falls outside a
    stretch of length ``attack_length + cycle_length``, so the miss
    probability is ``(horizon - (attack_length + cycle_length)) / horizon``,
    clamped to ``[0, 1]``.
    """
    _require_positive("horizon", horizon)
    _require_nonnegative("attack_length", attack_length)
    _require_nonnegative("cycle_length", cycle_length)
    return _clamp01((horizon - (attack_length + cycle_length)) / horizon)


def total_miss_probability(single_miss: float, on_count: int) -> float:
    """Probability that a window misses all ``on_count`` independent cycles.

    Uses the independence approximation ``single_miss ** on_count``, which is
    accurate when cycles are sparse in the horizon.
    """
    _require_finite("single_miss", single_miss)
    if not 0.0 <= single_miss <= 1.0:
        raise ValueError(f"single_miss must lie in [0, 1], got {single_miss!r}")
    if on_count < 0:
        raise ValueError(f"on_count must be >= 0, got {on_count}")
    return _clamp01(single_miss ** on_count)


def catastrophe_probability(horizon: float, on_count: int, attack_length: float,
                            cycle_length: float) -> float:
    """Probability that one attack window overlaps at least one of the cycles."""
    miss = window_miss_probability(horizon, attack_length, cycle_length)
    return _clamp01(1.0 - total_miss_probability(miss, on_count))


def catastrophe_probability_limit(on_density: float, attack_length: float,
                                  cycle_length: float) -> float:
    """Long-horizon limit of :func:`catastrophe_probability`.

    Holding the cycle density ``c = on_count / horizon`` fixed and letting the
    horizon grow, the overlap probability tends to
    ``1 - exp(-c * (attack_length + cycle_length))``.
    """
    _require_nonnegative("on_density", on_density)
    _require_nonnegative("attack_length", attack_length)
    _require_nonnegative("cycle_length", cycle_length)
    return _clamp01(-math.expm1(-on_density * (attack_length + cycle_length)))


def expected_overlap_count(horizon: float, mean_interval: float,
                           attack_length: float, cycle_length: float,
                           on_count: int) -> float:
    """Expected number of attack windows that overlap at least one cycle.

    The horizon holds about ``horizon / (mean_interval + attack_length)``
    windows, each overlapping some cycle with the probability
    ``1 - (1 - (attack_length + cycle_length) / horizon) ** on_count``:

    ``(horizon / (mean_interval + attack_length))
    * (1 - (1 - (attack_length + cycle_length) / horizon) ** on_count)``
    """
    _require_positive("horizon", horizon)
    _require_nonnegative("mean_interval", mean_interval)
    _require_nonnegative("attack_length", attack_length)
    _require_nonnegative("cycle_length", cycle_length)
    if on_count < 0:
        raise ValueError(f"on_count must be >= 0, got {on_count}")
    if mean_interval + attack_length <= 0:
        raise ValueError("mean_interval + attack_length must be > 0")
    windows = horizon / (mean_interval + attack_length)
    hit = 1.0 - max(0.0, 1.0 - (attack_length + cycle_length) / horizon) ** on_count
    return windows * _clamp01(hit)


def on_time_bound(attack_length: float, mean_interval: float,
                  cycle_length: float) -> float:
    """Cycle budget that keeps the expected overlap count at order one.

    The expected overlap count stays below one roughly while the number of
    cycles is small against ``(attack_length + mean_interval) /
    (attack_length + cycle_length)``; this returns that ratio.
    """
    _require_nonnegative("attack_length", attack_length)
    _require_nonnegative("mean_interval", mean_interval)
    _require_nonnegative("cycle_length", cycle_length)
    if attack_length + cycle_length <= 0:
        raise ValueError("attack_length + cycle_length must be > 0")
    return (attack_length + mean_interval) / (attack_length + cycle_length)


def max_safe_on_count(attack_length: float, mean_interval: float,
                      cycle_length: float, safety_fraction: float = 0.1) -> int:
    """Largest cycle count within ``safety_fraction`` of :func:`on_time_bound`.

    The bound itself marks where overlaps become order-one likely; staying at
    a small fraction of it (default one tenth) keeps the expected overlap
    count comfortably below one.
    """
    _require_positive("safety_fraction", safety_fraction)
    bound = on_time_bound(attack_length, mean_interval, cycle_length)
    return max(0, math.floor(safety_fraction * bound))
