"""Monte Carlo layer: containers, samplers, estimators, worker invariance."""

import math

import numpy as np
import pytest

from swapguard.errors import FeasibilityError
from swapguard.montecarlo import (
    AttackTrace,
    Estimate,
    GapKind,
    Interval,
    LengthKind,
    OnTimeSchedule,
    Phase,
    PhasePlan,
    TrialOutcome,
    count_overlaps,
    estimate_expected_overlaps,
    estimate_no_overlap_single_window,
    sample_attacks,
    sample_on_times,
    trial_stream,
)
from swapguard.timing import (
    AttackParams,
    CycleParams,
    catastrophe_probability,
    expected_overlap_count,
)

CYCLE = CycleParams(online=1.0, swap=0.5, reset=0.5)  # duration 2.5
ATTACK = AttackParams(mean_interval=50.0, mean_length=2.0)


class TestPhasePlan:
    def test_boundaries_and_arrival(self):
        plan = PhasePlan(CYCLE)
        assert plan.boundaries == (0.5, 1.0, 2.0, 2.5)
        assert plan.payload_arrival == 1.0

    def test_phase_at_is_half_open(self):
        plan = PhasePlan(CYCLE)
        assert plan.phase_at(0.0) is Phase.RESET
        assert plan.phase_at(0.5) is Phase.SWAP_IN
        assert plan.phase_at(1.0) is Phase.ONLINE
        assert plan.phase_at(2.0) is Phase.SWAP_OUT
        assert plan.phase_at(2.4999) is Phase.SWAP_OUT
        with pytest.raises(ValueError):
            plan.phase_at(2.5)
        with pytest.raises(ValueError):
            plan.phase_at(-0.001)

    def test_payload_present_from_arrival_onward(self):
        plan = PhasePlan(CYCLE)
        assert not plan.payload_present(0.99)
        assert plan.payload_present(1.0)
        assert plan.payload_present(2.49)


class TestIntervals:
    def test_contains_half_open(self):
        iv = Interval(1.0, 3.0)
        assert iv.contains(1.0)
        assert not iv.contains(3.0)
        assert iv.length == 2.0

    def test_touching_intervals_do_not_overlap(self):
        assert not Interval(0.0, 1.0).overlaps(Interval(1.0, 2.0))
        assert Interval(0.0, 1.5).overlaps(Interval(1.0, 2.0))

    def test_rejects_reversed_endpoints(self):
        with pytest.raises(ValueError):
            Interval(2.0, 1.0)


class TestContainers:
    def test_schedule_freezes_and_validates(self):
        sched = OnTimeSchedule(horizon=100.0, cycle=CYCLE,
                               on_times=np.array([0.0, 10.0, 50.0]))
        assert sched.count == 3
        assert not sched.on_times.flags.writeable
        bounds = sched.block_bounds()
        assert bounds.shape == (3, 2)
        assert np.allclose(bounds[:, 1] - bounds[:, 0], 2.5)
        assert sched.blocks()[1] == Interval(10.0, 12.5)

    @pytest.mark.parametrize("times", [
        [10.0, 5.0],          # unsorted
        [10.0, 11.0],         # blocks overlap (duration 2.5)
        [-1.0],               # negative start
        [98.0],               # block spills past the horizon
        [10.0, 10.0],         # duplicate start
    ])
    def test_schedule_rejects_bad_times(self, times):
        with pytest.raises(ValueError):
            OnTimeSchedule(horizon=100.0, cycle=CYCLE,
                           on_times=np.array(times))

    def test_trace_accepts_empty_and_validates(self):
        trace = AttackTrace(horizon=100.0, windows=np.empty((0, 2)),
                            gap_kind=GapKind.EXPONENTIAL,
                            length_kind=LengthKind.FIXED)
        assert trace.count == 0
        with pytest.raises(ValueError):
            AttackTrace(horizon=100.0, windows=np.array([[5.0, 3.0]]),
                        gap_kind=GapKind.EXPONENTIAL,
                        length_kind=LengthKind.FIXED)
        with pytest.raises(ValueError):
            AttackTrace(horizon=100.0, windows=np.array([[5.0, 8.0], [7.0, 9.0]]),
                        gap_kind=GapKind.EXPONENTIAL,
                        length_kind=LengthKind.FIXED)

    def test_outcome_detail_fields_are_all_or_nothing(self):
        TrialOutcome(overlap_count=0, first_overlap=None, hit_phase=None)
        TrialOutcome(overlap_count=2, first_overlap=1.0, hit_phase=Phase.RESET)
        with pytest.raises(ValueError):
            TrialOutcome(overlap_count=1, first_overlap=None, hit_phase=None)
        with pytest.raises(ValueError):
            TrialOutcome(overlap_count=0, first_overlap=1.0,
                         hit_phase=Phase.RESET)


class TestSamplers:
    def test_sample_on_times_deterministic_per_seed(self):
        a = sample_on_times(123, 1000.0, 10, CYCLE)
        b = sample_on_times(123, 1000.0, 10, CYCLE)
        assert np.array_equal(a.on_times, b.on_times)

    def test_sample_on_times_accepts_generator_and_seedsequence(self):
        gen = np.random.Generator(np.random.PCG64(np.random.SeedSequence(5)))
        a = sample_on_times(gen, 1000.0, 10, CYCLE)
        b = sample_on_times(np.random.SeedSequence(5), 1000.0, 10, CYCLE)
        assert np.array_equal(a.on_times, b.on_times)

    def test_feasibility_overfull(self):
        with pytest.raises(FeasibilityError):
            sample_on_times(0, 10.0, 5, CYCLE)  # 5 * 2.5 > 10

    def test_feasibility_exact_fit_multiblock(self):
        with pytest.raises(FeasibilityError):
            sample_on_times(0, 5.0, 2, CYCLE)  # 2 * 2.5 == 5, measure zero

    def test_exact_fit_single_block_is_fine(self):
        sched = sample_on_times(0, 2.5, 1, CYCLE)
        assert sched.on_times[0] == 0.0

    def test_single_window_kind(self):
        trace = sample_attacks(7, 1000.0, ATTACK, GapKind.SINGLE_WINDOW)
        assert trace.count == 1
        assert trace.windows[0, 1] - trace.windows[0, 0] == pytest.approx(2.0)
        with pytest.raises(ValueError):
            sample_attacks(7, 1.0, ATTACK, GapKind.SINGLE_WINDOW)
        with pytest.raises(ValueError):
            sample_attacks(7, 1000.0, ATTACK, GapKind.SINGLE_WINDOW,
                           LengthKind.EXPONENTIAL)

    @pytest.mark.parametrize("gap_kind", [GapKind.FIXED_PERIOD,
                                          GapKind.UNIFORM_JITTER,
                                          GapKind.EXPONENTIAL])
    @pytest.mark.parametrize("length_kind", [LengthKind.FIXED,
                                             LengthKind.EXPONENTIAL])
    def test_renewal_traces_are_valid(self, gap_kind, length_kind):
        trace = sample_attacks(11, 1000.0, ATTACK, gap_kind, length_kind)
        assert trace.gap_kind is gap_kind
        assert trace.length_kind is length_kind
        assert trace.params == ATTACK
        # AttackTrace.__post_init__ has already validated ordering/bounds.
        assert trace.count > 0

    def test_jitter_gaps_stay_in_band(self):
        trace = sample_attacks(3, 10000.0, ATTACK, GapKind.UNIFORM_JITTER,
                               LengthKind.FIXED)
        windows = trace.windows
        gaps = windows[1:, 0] - windows[:-1, 1]
        assert np.all(gaps >= 0.5 * ATTACK.mean_interval - 1e-12)
        assert np.all(gaps <= 1.5 * ATTACK.mean_interval + 1e-12)

    def test_fixed_gap_lengths_are_exact(self):
        trace = sample_attacks(3, 1000.0, ATTACK, GapKind.FIXED_PERIOD,
                               LengthKind.FIXED)
        windows = trace.windows
        full = windows[:-1]  # the last window may be clipped at the horizon
        assert np.allclose(full[:, 1] - full[:, 0], ATTACK.mean_length)
        gaps = windows[1:, 0] - windows[:-1, 1]
        assert np.allclose(gaps, ATTACK.mean_interval)


class TestCountOverlaps:
    def test_hand_case_with_phase(self):
        sched = OnTimeSchedule(horizon=100.0, cycle=CYCLE,
                               on_times=np.array([0.0, 10.0, 20.0, 30.0]))
        trace = AttackTrace(
            horizon=100.0,
            windows=np.array([[1.0, 3.0], [9.0, 23.0], [29.0, 29.5],
                              [33.0, 40.0]]),
            gap_kind=GapKind.EXPONENTIAL, length_kind=LengthKind.FIXED)
        outcome = count_overlaps(sched, trace)
        assert outcome.overlap_count == 3
        assert outcome.first_overlap == 1.0  # block [0, 2.5) meets [1, 3) at 1.0
        assert outcome.hit_phase is Phase.ONLINE  # offset 1.0 in [1.0, 2.0)
        assert outcome.catastrophic

    def test_no_overlap_outcome(self):
        sched = OnTimeSchedule(horizon=100.0, cycle=CYCLE,
                               on_times=np.array([50.0]))
        trace = AttackTrace(horizon=100.0, windows=np.array([[10.0, 12.0]]),
                            gap_kind=GapKind.EXPONENTIAL,
                            length_kind=LengthKind.FIXED)
        outcome = count_overlaps(sched, trace)
        assert outcome.overlap_count == 0
        assert outcome.first_overlap is None
        assert outcome.hit_phase is None
        assert not outcome.catastrophic

    def test_horizon_mismatch_rejected(self):
        sched = OnTimeSchedule(horizon=100.0, cycle=CYCLE,
                               on_times=np.array([50.0]))
        trace = AttackTrace(horizon=200.0, windows=np.array([[10.0, 12.0]]),
                            gap_kind=GapKind.EXPONENTIAL,
                            length_kind=LengthKind.FIXED)
        with pytest.raises(ValueError, match="horizon"):
            count_overlaps(sched, trace)


class TestEstimators:
    def test_trial_stream_is_seedsequence_spawn(self):
        expected = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence((42, 7))))
        assert trial_stream(42, 7).random() == expected.random()

    def test_single_window_estimate_frozen(self):
        est = estimate_no_overlap_single_window(7, 1000.0, 10, CYCLE, 2.0,
                                                2000)
        assert est == Estimate(value=0.962, stderr=0.004275277768753747,
                               trials=2000)

    def test_single_window_estimate_matches_closed_form(self):
        est = estimate_no_overlap_single_window(7, 1000.0, 10, CYCLE, 2.0,
                                                20000)
        miss_ref = 1.0 - catastrophe_probability(1000.0, 10, 2.0, 2.5)
        assert abs(est.value - miss_ref) <= 3.0 * est.stderr

    def test_single_window_no_blocks_never_hits(self):
        est = estimate_no_overlap_single_window(7, 1000.0, 0, CYCLE, 2.0, 500)
        assert est.value == 1.0 and est.stderr == 0.0

    def test_expected_overlaps_estimate_frozen(self):
        est = estimate_expected_overlaps(3, 1000.0, 10, CYCLE, ATTACK,
                                         GapKind.EXPONENTIAL,
                                         LengthKind.FIXED, 1500)
        assert est.value == 0.84
        assert est.stderr == pytest.approx(0.023327773409187083, rel=1e-12)

    def test_expected_overlaps_matches_closed_form(self):
        est = estimate_expected_overlaps(3, 1000.0, 10, CYCLE, ATTACK,
                                         GapKind.EXPONENTIAL,
                                         LengthKind.FIXED, 8000)
        reference = expected_overlap_count(1000.0, 50.0, 2.0, 2.5, 10)
        assert abs(est.value - reference) <= max(3.0 * est.stderr,
                                                 0.05 * reference)

    @pytest.mark.parametrize("workers", [2, 3, 4, 7])
    def test_worker_count_does_not_change_results(self, workers):
        serial = estimate_no_overlap_single_window(9, 1000.0, 10, CYCLE, 2.0,
                                                   1000)
        parallel = estimate_no_overlap_single_window(9, 1000.0, 10, CYCLE, 2.0,
                                                     1000, workers=workers)
        assert serial == parallel
        serial2 = estimate_expected_overlaps(9, 1000.0, 10, CYCLE, ATTACK,
                                             GapKind.EXPONENTIAL,
                                             LengthKind.FIXED, 600)
        parallel2 = estimate_expected_overlaps(9, 1000.0, 10, CYCLE, ATTACK,
                                               GapKind.EXPONENTIAL,
                                               LengthKind.FIXED, 600,
                                               workers=workers)
        assert serial2 == parallel2

    def test_estimators_reject_bad_trials(self):
        with pytest.raises(ValueError):
            estimate_no_overlap_single_window(1, 1000.0, 10, CYCLE, 2.0, 0)
        with pytest.raises(ValueError):
            estimate_expected_overlaps(1, 1000.0, 10, CYCLE, ATTACK,
                                       trials=0)

    def test_estimators_propagate_feasibility(self):
        with pytest.raises(FeasibilityError):
            estimate_no_overlap_single_window(1, 10.0, 100, CYCLE, 2.0, 10)
