"""End-to-end protocol runs: quarantine, corruption, verdicts, sweeps."""

import math

import numpy as np
import pytest

from swapguard.montecarlo import (
    AttackTrace,
    GapKind,
    LengthKind,
    OnTimeSchedule,
    Phase,
    count_overlaps,
    sample_attacks,
    sample_on_times,
    trial_stream,
)
from swapguard.protocol import (
    AttackScope,
    MalwarePolicy,
    NetworkConfig,
    PayloadKind,
    ProtocolMachine,
    run_protocol,
    sweep_experiment,
)
from swapguard.qstate import (
    bit_flip_kraus,
    depolarizing_kraus,
    fidelity,
    identity_kraus,
)
from swapguard.timing import AttackParams, CycleParams

CYCLE = CycleParams(online=1.0, swap=0.5, reset=0.5)  # payload span [1.0, 2.5)
BELL2 = NetworkConfig(node_count=2)
DEPOLARIZE = MalwarePolicy(kraus=tuple(depolarizing_kraus(1.0)),
                           scope=AttackScope.ONLINE_SITES)


def schedule(on_times, horizon=100.0, cycle=CYCLE):
    return OnTimeSchedule(horizon=horizon, cycle=cycle,
                          on_times=np.asarray(on_times, dtype=float))


def trace(windows, horizon=100.0):
    return AttackTrace(horizon=horizon,
                       windows=np.asarray(windows, dtype=float).reshape(-1, 2),
                       gap_kind=GapKind.EXPONENTIAL,
                       length_kind=LengthKind.FIXED)


class TestConfig:
    def test_bell_chain_payload_is_normalized(self):
        for nodes in (1, 2, 3, 4):
            vec = NetworkConfig(node_count=nodes).payload_vector()
            assert vec.shape == (2 ** nodes,)
            assert np.vdot(vec, vec).real == pytest.approx(1.0)

    def test_odd_chain_leaves_last_node_at_ground(self):
        vec = NetworkConfig(node_count=3).payload_vector()
        # (|00> + |11>)/sqrt(2) on the first two nodes, |0> on the third.
        expected = np.zeros(8)
        expected[0b000] = expected[0b110] = 1.0 / math.sqrt(2.0)
        assert np.abs(vec - expected).max() < 1e-15

    def test_custom_payload_required_exactly_for_custom_kind(self):
        with pytest.raises(ValueError):
            NetworkConfig(node_count=1, payload=PayloadKind.CUSTOM)
        with pytest.raises(ValueError):
            NetworkConfig(node_count=1, custom_payload=np.array([1.0, 0.0]))
        cfg = NetworkConfig(node_count=1, payload=PayloadKind.CUSTOM,
                            custom_payload=np.array([0.6, 0.8]))
        assert cfg.payload_vector()[1] == pytest.approx(0.8)

    def test_custom_payload_must_be_unit(self):
        with pytest.raises(ValueError):
            NetworkConfig(node_count=1, payload=PayloadKind.CUSTOM,
                          custom_payload=np.array([1.0, 1.0]))

    def test_policy_rejects_incomplete_kraus(self):
        with pytest.raises(ValueError):
            MalwarePolicy(kraus=(np.eye(2) * 0.5,),
                          scope=AttackScope.ONLINE_SITES)


class TestQuarantine:
    def test_no_attacks_means_perfect_fidelity(self):
        report = run_protocol(BELL2, schedule([10.0, 50.0]), trace([]),
                              DEPOLARIZE)
        assert report.final_fidelity == 1.0
        assert report.overlap_count == 0
        assert not report.catastrophic
        assert report.hit_phases == {}

    def test_gap_attacks_leave_payload_untouched(self):
        # Windows strictly between blocks: decoys absorb every hit.
        report = run_protocol(BELL2, schedule([10.0, 50.0]),
                              trace([[0.0, 5.0], [20.0, 30.0], [60.0, 61.0]]),
                              DEPOLARIZE)
        assert report.final_fidelity == 1.0
        assert report.overlap_count == 0
        assert not report.catastrophic
        assert report.decoy_attacks_absorbed == 3

    def test_ancilla_state_is_stable_under_decoy_attacks(self):
        machine = ProtocolMachine(BELL2, DEPOLARIZE, track_decoys=True)
        quiet, state_quiet = machine.run_with_state(
            schedule([10.0, 50.0]), trace([]))
        noisy, state_noisy = machine.run_with_state(
            schedule([10.0, 50.0]), trace([[20.0, 30.0]]))
        assert quiet.final_fidelity == 1.0
        assert noisy.final_fidelity == pytest.approx(1.0, abs=1e-12)
        assert np.abs(state_quiet.rho - state_noisy.rho).max() < 1e-12

    def test_pre_payload_hit_counts_but_does_not_corrupt(self):
        # The window covers only the reset step of the block at 10.0: the
        # data registers hold reset junk, so the payload is safe, but the
        # overlap itself is still a catastrophic verdict.
        report = run_protocol(BELL2, schedule([10.0]), trace([[10.0, 10.4]]),
                              DEPOLARIZE)
        assert report.catastrophic
        assert report.overlap_count == 1
        assert report.hit_phases == {Phase.RESET: 1}
        assert report.final_fidelity == pytest.approx(1.0, abs=1e-12)

    def test_decoys_only_scope_never_corrupts(self):
        policy = MalwarePolicy(kraus=tuple(depolarizing_kraus(1.0)),
                               scope=AttackScope.DECOYS_ONLY)
        report = run_protocol(BELL2, schedule([10.0]), trace([[10.5, 12.0]]),
                              policy)
        assert report.catastrophic  # the overlap still forces a reset
        assert report.final_fidelity == pytest.approx(1.0, abs=1e-12)


class TestCorruption:
    def test_full_block_depolarization_quarters_bell_fidelity(self):
        # A window covering the whole block fires the channel while the
        # payload is online; depolarizing one Bell pair leaves overlap 1/4.
        report = run_protocol(BELL2, schedule([10.0]), trace([[9.0, 14.0]]),
                              DEPOLARIZE)
        assert report.catastrophic
        assert report.final_fidelity == pytest.approx(0.25, abs=1e-10)

    def test_online_hit_records_payload_phase(self):
        report = run_protocol(BELL2, schedule([10.0]), trace([[11.2, 11.4]]),
                              DEPOLARIZE)
        assert report.hit_phases == {Phase.ONLINE: 1}
        assert report.final_fidelity == pytest.approx(0.25, abs=1e-10)

    def test_bit_flip_destroys_product_payload(self):
        config = NetworkConfig(node_count=1, payload=PayloadKind.PRODUCT)
        policy = MalwarePolicy(kraus=tuple(bit_flip_kraus(1.0)),
                               scope=AttackScope.ONLINE_SITES)
        report = run_protocol(config, schedule([10.0]), trace([[11.0, 11.5]]),
                              policy)
        assert report.final_fidelity == pytest.approx(0.0, abs=1e-12)

    def test_bell_chain_survives_correlated_flips(self):
        # X on both halves of a Bell pair stabilizes it: corruption is about
        # the state, not merely about operators having fired.
        policy = MalwarePolicy(kraus=tuple(bit_flip_kraus(1.0)),
                               scope=AttackScope.ONLINE_SITES)
        report = run_protocol(BELL2, schedule([10.0]), trace([[11.0, 11.5]]),
                              policy)
        assert report.final_fidelity == pytest.approx(1.0, abs=1e-10)


class TestMachineEquivalences:
    def test_exact_skip_matches_full_evolution(self):
        machine_fast = ProtocolMachine(BELL2, DEPOLARIZE, exact_skip=True)
        machine_slow = ProtocolMachine(BELL2, DEPOLARIZE, exact_skip=False)
        for seed in range(6):
            gen = trial_stream(77, seed)
            sched = sample_on_times(gen, 200.0, 4, CYCLE)
            atk = sample_attacks(gen, 200.0, AttackParams(30.0, 2.0))
            a = machine_fast.run(sched, atk)
            b = machine_slow.run(sched, atk)
            assert a.overlap_count == b.overlap_count
            assert a.hit_phases == b.hit_phases
            assert abs(a.final_fidelity - b.final_fidelity) < 1e-12

    def test_decoy_tracking_changes_no_report_field(self):
        plain = ProtocolMachine(BELL2, DEPOLARIZE)
        tracked = ProtocolMachine(BELL2, DEPOLARIZE, track_decoys=True)
        for seed in range(6):
            gen = trial_stream(78, seed)
            sched = sample_on_times(gen, 200.0, 4, CYCLE)
            atk = sample_attacks(gen, 200.0, AttackParams(30.0, 2.0))
            a = plain.run(sched, atk)
            b = tracked.run(sched, atk)
            assert a.overlap_count == b.overlap_count
            assert a.decoy_attacks_absorbed == b.decoy_attacks_absorbed
            assert abs(a.final_fidelity - b.final_fidelity) < 1e-12

    def test_overlap_count_matches_interval_scan(self):
        machine = ProtocolMachine(BELL2, DEPOLARIZE)
        for seed in range(10):
            gen = trial_stream(79, seed)
            sched = sample_on_times(gen, 300.0, 5, CYCLE)
            atk = sample_attacks(gen, 300.0, AttackParams(20.0, 3.0))
            report = machine.run(sched, atk)
            outcome = count_overlaps(sched, atk)
            assert report.overlap_count == outcome.overlap_count
            assert report.catastrophic == outcome.catastrophic
            assert sum(report.hit_phases.values()) == report.overlap_count

    def test_identity_malware_never_lowers_fidelity(self):
        policy = MalwarePolicy(kraus=tuple(identity_kraus(2)),
                               scope=AttackScope.ONLINE_SITES)
        report = run_protocol(BELL2, schedule([10.0]), trace([[9.0, 14.0]]),
                              policy)
        assert report.catastrophic
        assert report.final_fidelity == pytest.approx(1.0, abs=1e-10)

    def test_horizon_mismatch_rejected(self):
        machine = ProtocolMachine(BELL2, DEPOLARIZE)
        with pytest.raises(ValueError, match="horizon"):
            machine.run(schedule([10.0], horizon=100.0),
                        trace([[1.0, 2.0]], horizon=50.0))

    def test_zero_duration_cycle_rejected(self):
        zero = CycleParams(online=0.0, swap=0.0, reset=0.0)
        machine = ProtocolMachine(BELL2, DEPOLARIZE)
        with pytest.raises(ValueError):
            machine.run(schedule([10.0], cycle=zero), trace([]))


class TestSweep:
    def test_sweep_is_deterministic(self):
        args = (17, BELL2, DEPOLARIZE, 200.0, 4, CYCLE,
                AttackParams(50.0, 2.0), GapKind.SINGLE_WINDOW,
                LengthKind.FIXED, 200)
        assert sweep_experiment(*args) == sweep_experiment(*args)

    def test_sweep_aggregates_consistently(self):
        result = sweep_experiment(21, BELL2, DEPOLARIZE, 200.0, 4, CYCLE,
                                  AttackParams(50.0, 2.0),
                                  GapKind.SINGLE_WINDOW, LengthKind.FIXED,
                                  300)
        assert result.trials == 300
        assert 0.0 <= result.catastrophe_rate <= 1.0
        assert 0.0 <= result.mean_fidelity <= 1.0
        assert result.mean_overlaps >= result.catastrophe_rate
        binom = math.sqrt(result.catastrophe_rate
                          * (1.0 - result.catastrophe_rate) / 300)
        assert result.catastrophe_stderr == pytest.approx(binom)

    def test_sweep_replays_single_trials(self):
        # Each sweep trial must be reproducible in isolation from its stream.
        machine = ProtocolMachine(BELL2, DEPOLARIZE)
        result = sweep_experiment(33, BELL2, DEPOLARIZE, 200.0, 4, CYCLE,
                                  AttackParams(50.0, 2.0),
                                  GapKind.SINGLE_WINDOW, LengthKind.FIXED, 40)
        catastrophes = 0
        for index in range(40):
            gen = trial_stream(33, index)
            sched = sample_on_times(gen, 200.0, 4, CYCLE)
            atk_windows = sample_attacks(gen, 200.0, AttackParams(50.0, 2.0),
                                         GapKind.SINGLE_WINDOW,
                                         LengthKind.FIXED)
            catastrophes += machine.run(sched, atk_windows).catastrophic
        assert result.catastrophe_rate == catastrophes / 40

    def test_sweep_with_no_blocks_is_always_clean(self):
        result = sweep_experiment(3, BELL2, DEPOLARIZE, 200.0, 0, CYCLE,
                                  AttackParams(50.0, 2.0),
                                  GapKind.EXPONENTIAL, LengthKind.FIXED, 50)
        assert result.catastrophe_rate == 0.0
        assert result.mean_fidelity == 1.0
        assert result.mean_overlaps == 0.0
        assert result.mean_absorbed > 0.0
