"""Threshold sharing of schedule seeds: round trips, secrecy, interchange."""

import itertools
import json

import numpy as np
import pytest

from swapguard.errors import QuorumError
from swapguard.montecarlo import sample_on_times
from swapguard.secret import (
    DEFAULT_PRIME,
    TEST_PRIME,
    Share,
    expand_schedule,
    reconstruct_seed,
    share_from_json,
    share_to_json,
    split_seed,
)
from swapguard.timing import CycleParams

SEED = 0xDEADBEEFCAFEF00D
CYCLE = CycleParams(online=1.0, swap=0.5, reset=0.5)


class TestSplitReconstruct:
    def test_roundtrip_every_quorum(self):
        shares = split_seed(SEED, 3, 5, np.random.default_rng(1)).shares
        for quorum in itertools.combinations(shares, 3):
            assert reconstruct_seed(quorum, 3, DEFAULT_PRIME) == SEED

    def test_disjoint_quorums_agree(self):
        shares = split_seed(SEED, 2, 4, np.random.default_rng(2)).shares
        a = reconstruct_seed(shares[:2], 2, DEFAULT_PRIME)
        b = reconstruct_seed(shares[2:], 2, DEFAULT_PRIME)
        assert a == b == SEED

    def test_extra_shares_beyond_threshold_are_ignored(self):
        shares = split_seed(SEED, 2, 5, np.random.default_rng(3)).shares
        assert reconstruct_seed(shares, 2, DEFAULT_PRIME) == SEED

    def test_threshold_one_and_full(self):
        lone = split_seed(SEED, 1, 3, np.random.default_rng(4)).shares
        assert reconstruct_seed(lone[:1], 1, DEFAULT_PRIME) == SEED
        full = split_seed(SEED, 4, 4, np.random.default_rng(5)).shares
        assert reconstruct_seed(full, 4, DEFAULT_PRIME) == SEED

    @pytest.mark.parametrize("seed", [0, 1, 2 ** 64 - 1])
    def test_edge_seeds(self, seed):
        shares = split_seed(seed, 2, 3, np.random.default_rng(6)).shares
        assert reconstruct_seed(shares[:2], 2, DEFAULT_PRIME) == seed

    def test_split_is_deterministic_for_a_given_rng(self):
        share_set = split_seed(SEED, 3, 5, np.random.default_rng(42))
        assert share_set.shares[0].limbs == (48039, 55002, 5539, 47251)
        assert share_set.shares[4].limbs == (43560, 64901, 27693, 52522)

    def test_small_field_roundtrip(self):
        for trial in range(50):
            gen = np.random.default_rng(1000 + trial)
            seed = int(gen.integers(0, 2 ** 64, dtype=np.uint64))
            shares = split_seed(seed, 2, 3, gen, prime=TEST_PRIME).shares
            assert len(shares[0].limbs) == 8  # 8-bit limbs for a 64-bit seed
            assert reconstruct_seed(shares[:2], 2, TEST_PRIME) == seed

    def test_split_validation(self):
        rng = np.random.default_rng(0)
        with pytest.raises(ValueError):
            split_seed(2 ** 64, 2, 3, rng)
        with pytest.raises(ValueError):
            split_seed(-1, 2, 3, rng)
        with pytest.raises(ValueError):
            split_seed(1, 0, 3, rng)
        with pytest.raises(ValueError):
            split_seed(1, 4, 3, rng)
        with pytest.raises(ValueError):
            split_seed(1, 2, 3, rng, prime=15)  # composite
        with pytest.raises(ValueError):
            split_seed(1, 2, 300, rng, prime=TEST_PRIME)  # parties >= prime


class TestQuorumFailures:
    def test_too_few_shares(self):
        shares = split_seed(SEED, 3, 5, np.random.default_rng(7)).shares
        with pytest.raises(QuorumError):
            reconstruct_seed(shares[:2], 3, DEFAULT_PRIME)

    def test_duplicate_parties(self):
        shares = split_seed(SEED, 2, 3, np.random.default_rng(8)).shares
        with pytest.raises(QuorumError):
            reconstruct_seed([shares[0], shares[0]], 2, DEFAULT_PRIME)

    def test_out_of_range_limb(self):
        shares = split_seed(SEED, 2, 3, np.random.default_rng(9)).shares
        bad = Share(party_id=shares[0].party_id,
                    limbs=(DEFAULT_PRIME,) + shares[0].limbs[1:])
        with pytest.raises(QuorumError):
            reconstruct_seed([bad, shares[1]], 2, DEFAULT_PRIME)

    def test_corrupted_share_reconstructs_silently_wrong(self):
        # Plain threshold sharing has no integrity check: a tampered limb
        # that stays in range yields a wrong seed without any error.
        shares = split_seed(SEED, 2, 3, np.random.default_rng(10)).shares
        tampered = Share(party_id=shares[0].party_id,
                         limbs=((shares[0].limbs[0] + 1) % DEFAULT_PRIME,)
                         + shares[0].limbs[1:])
        wrong = reconstruct_seed([tampered, shares[1]], 2, DEFAULT_PRIME)
        assert wrong != SEED


class TestSecrecy:
    def test_single_share_reveals_nothing_in_small_field(self):
        # Exhaustive over the 8-bit secret space and all blinding
        # coefficients: every share value is hit exactly once per secret, so
        # the joint distribution of (secret, share value) is flat.
        p = TEST_PRIME
        for party in (1, 2, 3):
            counts = np.zeros((256, p), dtype=np.int64)
            for secret in range(256):
                for coeff in range(p):
                    counts[secret, (secret + coeff * party) % p] += 1
            assert counts.min() == 1 and counts.max() == 1

    def test_share_values_follow_the_polynomial(self):
        # The library's shares must realize the same evaluation map the
        # secrecy argument is about: y = limb + coeff * party mod p.
        gen = np.random.default_rng(11)
        shares = split_seed(0, 2, 3, gen, prime=TEST_PRIME).shares
        coeff_gen = np.random.default_rng(11)
        coeffs = [int(coeff_gen.integers(0, TEST_PRIME)) for _ in range(8)]
        for share in shares:
            for limb_value, coeff in zip(share.limbs, coeffs):
                assert limb_value == (0 + coeff * share.party_id) % TEST_PRIME


class TestScheduleExpansion:
    def test_expand_matches_direct_sampling(self):
        schedule = expand_schedule(SEED, 1000.0, 10, CYCLE)
        direct = sample_on_times(SEED, 1000.0, 10, CYCLE)
        assert np.array_equal(schedule.on_times, direct.on_times)

    def test_reconstructed_seed_expands_identically(self):
        shares = split_seed(SEED, 2, 4, np.random.default_rng(12)).shares
        seed_a = reconstruct_seed(shares[:2], 2, DEFAULT_PRIME)
        seed_b = reconstruct_seed(shares[2:], 2, DEFAULT_PRIME)
        sched_a = expand_schedule(seed_a, 500.0, 6, CYCLE)
        sched_b = expand_schedule(seed_b, 500.0, 6, CYCLE)
        assert np.array_equal(sched_a.on_times, sched_b.on_times)


class TestInterchange:
    def test_json_roundtrip(self):
        shares = split_seed(SEED, 3, 5, np.random.default_rng(13)).shares
        blob = share_to_json(shares[2], 3, DEFAULT_PRIME)
        share, threshold, prime = share_from_json(blob)
        assert share == shares[2]
        assert threshold == 3
        assert prime == DEFAULT_PRIME

    def test_share_file_schema(self):
        shares = split_seed(SEED, 2, 3, np.random.default_rng(14)).shares
        data = json.loads(share_to_json(shares[0], 2, DEFAULT_PRIME))
        assert set(data) == {"party_id", "p", "k", "limbs"}

    @pytest.mark.parametrize("blob", [
        "not json",
        "[1, 2]",
        '{"party_id": 1, "p": 65537, "k": 2}',
        '{"party_id": 1, "p": 65537, "k": 2, "limbs": [1], "extra": 0}',
        '{"party_id": "1", "p": 65537, "k": 2, "limbs": [1]}',
        '{"party_id": 1, "p": 65537, "k": 2, "limbs": "12"}',
    ])
    def test_malformed_share_files_rejected(self, blob):
        with pytest.raises(QuorumError):
            share_from_json(blob)
