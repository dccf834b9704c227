"""Threshold sharing of the schedule seed over a prime field.

The defense schedule is pseudorandom, so whoever holds the 64-bit root seed
can recompute every on time.  To distribute that trust, the seed is split
into limbs small enough for the working field and each limb is shared with a
random polynomial of degree ``threshold - 1`` (classic threshold sharing:
any ``threshold`` parties reconstruct, fewer learn nothing).  The default
field is the prime ``65537`` with 16-bit limbs; the desk-scale field ``257``
with 8-bit limbs is kept for exhaustive secrecy checks in the tests.

Reconstruction interpolates each limb polynomial at zero.  Corrupted shares
are not detected: any ``threshold`` well-formed shares reconstruct *some*
seed, silently wrong when a share was tampered with.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import QuorumError
from .montecarlo import DEFAULT_MAX_ATTEMPTS, OnTimeSchedule
from .montecarlo import sample_on_times as _sample_on_times
from .timing import CycleParams

__all__ = [
    "DEFAULT_PRIME",
    "TEST_PRIME",
    "SEED_BITS",
    "Share",
    "ShareSet",
    "split_seed",
    "reconstruct_seed",
    "expand_schedule",
    "share_to_json",
    "share_from_json",
]

DEFAULT_PRIME = 65537
TEST_PRIME = 257
SEED_BITS = 64


def _limb_bits(prime: int) -> int:
    """Largest limb width (bits) whose values all fit below ``prime``."""
    if prime < 3:
        raise ValueError(f"prime must be >= 3, got {prime}")
    return (prime - 1).bit_length() - 1


def _limb_count(prime: int) -> int:
    bits = _limb_bits(prime)
    return -(-SEED_BITS // bits)


def _is_probable_prime(n: int) -> bool:
    """Deterministic Miller-Rabin for 64-bit inputs."""
    if n < 2:
        return False
    for p in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n % p == 0:
            return n == p
    d = n - 1
    r = 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for a in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


@dataclass(frozen=True)
class Share:
    """One party's share: the limb polynomial values at ``x = party_id``."""

    party_id: int
    limbs: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.party_id < 1:
            raise ValueError("party_id must be >= 1")
        object.__setattr__(self, "limbs", tuple(int(v) for v in self.limbs))


@dataclass(frozen=True)
class ShareSet:
    """The full output of one split."""

    threshold: int
    share_count: int
    prime: int
    shares: tuple[Share, ...]


def split_seed(seed: int, threshold: int, share_count: int, rng, *,
               prime: int = DEFAULT_PRIME) -> ShareSet:
    """Split a 64-bit seed into ``share_count`` shares, any ``threshold`` of
    which reconstruct it.

    ``rng`` provides the polynomial coefficients (a numpy ``Generator`` or an
    int seed for one).  Party ids are ``1..share_count``; the secret limb sits
    at ``x = 0``.
    """
    if not 0 <= seed < (1 << SEED_BITS):
        raise ValueError(f"seed must be a {SEED_BITS}-bit nonnegative int")
    if threshold < 1:
        raise ValueError("threshold must be >= 1")
    if share_count < threshold:
        raise ValueError("share_count must be >= threshold")
    if not _is_probable_prime(prime):
        raise ValueError(f"{prime} is not prime")
    if share_count >= prime:
        raise ValueError("share_count must be below the prime")
    gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)

    bits = _limb_bits(prime)
    count = _limb_count(prime)
    mask = (1 << bits) - 1
    limbs = [(seed >> (bits * (count - 1 - i))) & mask for i in range(count)]

    values = [[] for _ in range(share_count)]
    for limb in limbs:
        coeffs = [limb] + [int(gen.integers(0, prime))
                           for _ in range(threshold - 1)]
        for party in range(1, share_count + 1):
            acc = 0
            for c in reversed(coeffs):
                acc = (acc * party + c) % prime
            values[party - 1].append(acc)
    shares = tuple(Share(party_id=p + 1, limbs=tuple(values[p]))
                   for p in range(share_count))
    return ShareSet(threshold=threshold, share_count=share_count, prime=prime,
                    shares=shares)


def reconstruct_seed(shares, threshold: int, prime: int) -> int:
    """Recover the seed from at least ``threshold`` shares.

    Raises :class:`QuorumError` on too few shares, duplicate parties, or
    inconsistent limb counts.  Tampered share values are generally *not*
    detectable: they reconstruct a wrong seed silently.  The single exception
    is a reconstructed limb falling outside the limb range (impossible for a
    consistent quorum), which raises.
    """
    shares = list(shares)
    if len(shares) < threshold:
        raise QuorumError(f"need at least {threshold} shares, got {len(shares)}")
    if not _is_probable_prime(prime):
        raise ValueError(f"{prime} is not prime")
    shares = sorted(shares, key=lambda s: s.party_id)[:threshold]
    ids = [s.party_id for s in shares]
    if len(set(ids)) != len(ids):
        raise QuorumError(f"duplicate party ids in {ids}")
    if any(not 1 <= i < prime for i in ids):
        raise QuorumError("party ids must lie in [1, prime)")
    count = _limb_count(prime)
    if any(len(s.limbs) != count for s in shares):
        raise QuorumError(f"every share needs {count} limbs for prime {prime}")
    if any(not 0 <= v < prime for s in shares for v in s.limbs):
        raise QuorumError("share limbs must lie in [0, prime)")

    bits = _limb_bits(prime)
    limbs = []
    for limb_index in range(count):
        total = 0
        for j, share in enumerate(shares):
            numer = 1
            denom = 1
            for m, other in enumerate(shares):
                if m == j:
                    continue
                numer = numer * (-other.party_id) % prime
                denom = denom * (share.party_id - other.party_id) % prime
            weight = numer * pow(denom, prime - 2, prime) % prime
            total = (total + share.limbs[limb_index] * weight) % prime
        if total > (1 << bits) - 1:
            raise QuorumError(
                f"reconstructed limb {total} exceeds {bits} bits; "
                f"shares are inconsistent")
        limbs.append(total)
    seed = 0
    for limb in limbs:
        seed = (seed << bits) | limb
    return seed


def expand_schedule(seed: int, horizon: float, count: int, cycle: CycleParams,
                    *, max_attempts: int = DEFAULT_MAX_ATTEMPTS) -> OnTimeSchedule:
    """Deterministically expand a reconstructed seed into the on-time schedule.

    Identical to sampling the schedule directly with the same root seed, so
    share holders and the scheduler agree on every on time.
    """
    return _sample_on_times(seed, horizon, count, cycle,
                            max_attempts=max_attempts)


def share_to_json(share: Share, threshold: int, prime: int) -> str:
    """Serialize one share to its interchange form."""
    return json.dumps(
        {"party_id": share.party_id, "p": prime, "k": threshold,
         "limbs": list(share.limbs)},
        sort_keys=True)


def share_from_json(text: str) -> tuple[Share, int, int]:
    """Parse a share file; returns ``(share, threshold, prime)``."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise QuorumError(f"malformed share file: {exc}") from exc
    if not isinstance(data, dict):
        raise QuorumError("malformed share file: expected an object")
    required = {"party_id", "p", "k", "limbs"}
    missing = required - set(data)
    if missing:
        raise QuorumError(f"share file missing fields: {sorted(missing)}")
    extra = set(data) - required
    if extra:
        raise QuorumError(f"share file has unknown fields: {sorted(extra)}")
    party_id, prime, threshold, limbs = (data["party_id"], data["p"],
                                         data["k"], data["limbs"])
    if not isinstance(party_id, int) or not isinstance(prime, int) \
            or not isinstance(threshold, int) or not isinstance(limbs, list) \
            or not all(isinstance(v, int) for v in limbs):
        raise QuorumError("share file fields have wrong types")
    return Share(party_id=party_id, limbs=tuple(limbs)), threshold, prime
