"""Occupation-number registers and the swap identities in second quantization.

A :class:`FockRegister` holds ``n_modes`` modes, each truncated at occupation
``n_max`` (forced to 1 for fermions).  Fermionic ladder operators carry the
standard parity-string construction so that anticommutation relations hold
exactly; bosonic ones are plain truncated ladders.  Particles with internal
levels are represented as consecutive mode pairs in the declared order: data
particle levels first, ancilla particle levels after (mode ``2*p`` is level 0
of particle ``p``, mode ``2*p + 1`` its level 1).

The payload swap appears here as a mode-pair beam-splitter rotation at angle
``pi/2`` applied to both levels, and the identities checked by the test suite
are the rotation of creation operators under conjugation and the agreement of
the particle swap with the first-quantized exchange on singly occupied pairs.
Bosonic identities are exact on the subspace whose relevant total occupation
stays below the truncation; the residual helpers restrict accordingly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import reduce

import numpy as np

from .errors import DimensionCapError
from .qstate import MAX_JOINT_DIM

__all__ = [
    "Statistics",
    "FockRegister",
    "LadderMonomial",
    "mode_rotation",
    "particle_swap",
    "monomial_matrix",
    "shift_monomial",
    "bch_identity_residual",
]

DEFAULT_BOSON_CUTOFF = 3


class Statistics(Enum):
    FERMIONIC = "fermionic"
    BOSONIC = "bosonic"


@dataclass(frozen=True)
class LadderMonomial:
    """Exponents ``(k, l, m, n)`` of ``c0^dag^k c1^dag^l c0^m c1^n``.

    The two modes are the internal levels of one particle.  For fermions any
    exponent above 1 makes the monomial identically zero; that is legal and
    flagged by :attr:`fermionic_zero`.
    """

    k: int
    l: int
    m: int
    n: int

    def __post_init__(self) -> None:
        for name in ("k", "l", "m", "n"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 0:
                raise ValueError(f"exponent {name} must be a nonnegative int")

    @property
    def exponents(self) -> tuple[int, int, int, int]:
        return (self.k, self.l, self.m, self.n)

    @property
    def fermionic_zero(self) -> bool:
        return any(e >= 2 for e in self.exponents)


class FockRegister:
    """A truncated occupation-number register of ``n_modes`` modes."""

    __slots__ = ("statistics", "n_modes", "n_max", "local_dim", "dim",
                 "_annihilators", "_rotation_eigs")

    def __init__(self, statistics: Statistics, n_modes: int,
                 n_max: int | None = None):
        if not isinstance(statistics, Statistics):
            raise ValueError("statistics must be a Statistics member")
        if n_modes < 1:
            raise ValueError("n_modes must be >= 1")
        if statistics is Statistics.FERMIONIC:
            if n_max not in (None, 1):
                raise ValueError("fermionic modes hold at most one excitation")
            n_max = 1
        elif n_max is None:
            n_max = DEFAULT_BOSON_CUTOFF
        if n_max < 1:
            raise ValueError("n_max must be >= 1")
        dim = (n_max + 1) ** n_modes
        if dim > MAX_JOINT_DIM:
            raise DimensionCapError(
                f"register dimension {dim} exceeds the cap {MAX_JOINT_DIM}")
        self.statistics = statistics
        self.n_modes = n_modes
        self.n_max = n_max
        self.local_dim = n_max + 1
        self.dim = dim
        self._annihilators: dict[int, np.ndarray] = {}
        self._rotation_eigs: dict[tuple[int, int], tuple[np.ndarray, np.ndarray]] = {}

    @classmethod
    def particle_pair(cls, statistics: Statistics,
                      n_max: int | None = None) -> "FockRegister":
        """Register for one data particle and one ancilla particle (4 modes)."""
        return cls(statistics, n_modes=4, n_max=n_max)

    def _check_mode(self, mode: int) -> None:
        if not 0 <= mode < self.n_modes:
            raise ValueError(f"mode {mode} out of range for {self.n_modes} modes")

    def annihilate(self, mode: int) -> np.ndarray:
        """Annihilator for ``mode`` (with the fermionic parity string)."""
        self._check_mode(mode)
        cached = self._annihilators.get(mode)
        if cached is not None:
            return cached
        lower = np.diag(np.sqrt(np.arange(1.0, self.local_dim)), k=1)
        lower = lower.astype(np.complex128)
        parity = np.diag((-1.0 + 0j) ** np.arange(self.local_dim))
        eye = np.eye(self.local_dim, dtype=np.complex128)
        factors = []
        for m in range(self.n_modes):
            if m == mode:
                factors.append(lower)
            elif m < mode and self.statistics is Statistics.FERMIONIC:
                factors.append(parity)
            else:
                factors.append(eye)
        op = reduce(np.kron, factors)
        op.setflags(write=False)
        self._annihilators[mode] = op
        return op

    def create(self, mode: int) -> np.ndarray:
        return self.annihilate(mode).conj().T

    def number(self, mode: int) -> np.ndarray:
        a = self.annihilate(mode)
        return a.conj().T @ a

    def vacuum_vector(self) -> np.ndarray:
        vec = np.zeros(self.dim, dtype=np.complex128)
        vec[0] = 1.0
        return vec

    def occupations(self) -> np.ndarray:
        """``table[i, m]`` is the occupation of mode ``m`` in basis state ``i``."""
        table = np.empty((self.dim, self.n_modes), dtype=np.intp)
        rem = np.arange(self.dim)
        for m in range(self.n_modes - 1, -1, -1):
            table[:, m] = rem % self.local_dim
            rem = rem // self.local_dim
        return table

    def total_occupation(self, modes) -> np.ndarray:
        """Total occupation of ``modes`` per basis state."""
        modes = tuple(int(m) for m in modes)
        for m in modes:
            self._check_mode(m)
        return self.occupations()[:, list(modes)].sum(axis=1)

    def particle_modes(self, particle: int) -> tuple[int, int]:
        """Modes carrying the two levels of ``particle`` (consecutive pairs)."""
        if self.n_modes % 2:
            raise ValueError("particle addressing needs an even mode count")
        if not 0 <= particle < self.n_modes // 2:
            raise ValueError(f"particle {particle} out of range")
        return (2 * particle, 2 * particle + 1)


def _rotation_eigensystem(register: FockRegister, data_mode: int,
                          ancilla_mode: int) -> tuple[np.ndarray, np.ndarray]:
    key = (data_mode, ancilla_mode)
    cached = register._rotation_eigs.get(key)
    if cached is not None:
        return cached
    generator = (register.create(data_mode) @ register.annihilate(ancilla_mode)
                 - register.create(ancilla_mode) @ register.annihilate(data_mode))
    # The generator is anti-Hermitian, so i*G is Hermitian and one
    # eigendecomposition serves every angle.
    hermitian = 1j * generator
    values, vectors = np.linalg.eigh(hermitian)
    register._rotation_eigs[key] = (values, vectors)
    return values, vectors


def mode_rotation(register: FockRegister, data_mode: int, ancilla_mode: int,
                  angle: float) -> np.ndarray:
    """Beam-splitter rotation ``exp(angle * (c_d^dag c_a - c_a^dag c_d))``."""
    register._check_mode(data_mode)
    register._check_mode(ancilla_mode)
    if data_mode == ancilla_mode:
        raise ValueError("rotation needs two distinct modes")
    values, vectors = _rotation_eigensystem(register, data_mode, ancilla_mode)
    phases = np.exp(-1j * angle * values)
    return (vectors * phases) @ vectors.conj().T


def particle_swap(register: FockRegister, data_particle: int = 0,
                  ancilla_particle: int = 1) -> np.ndarray:
    """Swap a data particle with an ancilla particle, level by level.

    The swap is the product of the two level rotations at angle ``pi/2``;
    the level-0 and level-1 rotations act on disjoint mode pairs and commute.
    """
    d0, d1 = register.particle_modes(data_particle)
    a0, a1 = register.particle_modes(ancilla_particle)
    half_pi = math.pi / 2.0
    return (mode_rotation(register, d0, a0, half_pi)
            @ mode_rotation(register, d1, a1, half_pi))


def monomial_matrix(register: FockRegister, particle: int,
                    monomial: LadderMonomial) -> np.ndarray:
    """Matrix of ``c0^dag^k c1^dag^l c0^m c1^n`` on one particle's mode pair."""
    mode0, mode1 = register.particle_modes(particle)
    out = np.eye(register.dim, dtype=np.complex128)
    for op, power in ((register.create(mode0), monomial.k),
                      (register.create(mode1), monomial.l),
                      (register.annihilate(mode0), monomial.m),
                      (register.annihilate(mode1), monomial.n)):
        for _ in range(power):
            out = out @ op
    return out


def shift_monomial(register: FockRegister, monomial: LadderMonomial,
                   data_particle: int = 0,
                   ancilla_particle: int = 1) -> np.ndarray:
    """Conjugate a data-particle monomial by the swap: ``S^dag F_d S``.

    For fermions this equals the same monomial on the ancilla particle
    exactly; for bosons the equality holds on the subspace whose pair
    occupation stays below the truncation.
    """
    swap = particle_swap(register, data_particle, ancilla_particle)
    matrix = monomial_matrix(register, data_particle, monomial)
    return swap.conj().T @ matrix @ swap


def _unconstrained_columns(register: FockRegister, modes,
                           headroom: int) -> np.ndarray:
    """Mask of basis states whose ``modes`` hold at most ``n_max - headroom``."""
    if register.statistics is Statistics.FERMIONIC:
        return np.ones(register.dim, dtype=bool)
    return register.total_occupation(modes) <= register.n_max - headroom


def bch_identity_residual(register: FockRegister, data_mode: int,
                          ancilla_mode: int, angle: float) -> float:
    """Residual of the conjugated-ladder rotation identity at ``angle``.

    Checks ``exp(-t G) c_d^dag exp(t G) = cos(t) c_d^dag + sin(t) c_a^dag``
    (and its annihilator adjoint) columnwise.  For bosons the columns are
    restricted to basis states with pair occupation strictly below the
    truncation, where the identity is exact; fermions need no restriction.
    """
    rotation = mode_rotation(register, data_mode, ancilla_mode, angle)
    cos_t, sin_t = math.cos(angle), math.sin(angle)
    mask = _unconstrained_columns(register, (data_mode, ancilla_mode), 1)
    residual = 0.0
    for lhs_op, rhs_op in (
            (register.create(data_mode),
             cos_t * register.create(data_mode)
             + sin_t * register.create(ancilla_mode)),
            (register.annihilate(data_mode),
             cos_t * register.annihilate(data_mode)
             + sin_t * register.annihilate(ancilla_mode))):
        conjugated = rotation.conj().T @ lhs_op @ rotation
        gap = np.abs((conjugated - rhs_op)[:, mask])
        if gap.size:
            residual = max(residual, float(gap.max()))
    return residual
