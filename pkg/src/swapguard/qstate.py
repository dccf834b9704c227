"""Dense multi-site density-matrix engine.

Sites are finite-dimensional registers with roles (data, ancilla, decoy)
arranged in a :class:`SiteLayout`.  States are dense complex density matrices
over the joint space; channels are Kraus maps targeting a subset of sites and
are embedded into the joint space on application.  The swap unitary that
moves payloads between data and ancilla registers is ``i * P`` with ``P`` the
pair exchange permutation, and the central identity checked throughout the
package is that conjugating a data-side channel by that swap retargets it to
the ancilla side.

Joint dimensions are capped at :data:`MAX_JOINT_DIM`; everything here is
plain dense numpy linear algebra, which is exact enough for the algebraic
residual budget (:data:`ALGEBRA_TOL`) at these sizes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np

from .errors import DimensionCapError

__all__ = [
    "ALGEBRA_TOL",
    "EIGENVALUE_FLOOR",
    "MAX_JOINT_DIM",
    "PAULI_I",
    "PAULI_X",
    "PAULI_Y",
    "PAULI_Z",
    "SiteRole",
    "SiteLayout",
    "DensityState",
    "KrausChannel",
    "pauli_operator",
    "exchange_matrix",
    "swap_matrix",
    "heisenberg_swap_pair",
    "generalized_swap",
    "full_swap",
    "embed_operator",
    "expand_vector",
    "basis_vector",
    "bell_vector",
    "bell_pair",
    "product_state",
    "apply_unitary",
    "apply_channel",
    "apply_channel_selective",
    "conjugate_channel_by_swap",
    "fidelity",
    "purity",
    "partial_trace",
    "superoperator_matrix",
    "channel_superoperator",
    "identity_kraus",
    "erasure_kraus",
    "depolarizing_kraus",
    "bit_flip_kraus",
    "phase_flip_kraus",
    "random_density_matrix",
    "random_kraus_channel",
]

ALGEBRA_TOL = 1e-10
EIGENVALUE_FLOOR = -1e-8
MAX_JOINT_DIM = 4096

PAULI_I = np.eye(2, dtype=np.complex128)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)

_PAULIS = {"x": PAULI_X, "y": PAULI_Y, "z": PAULI_Z, "i": PAULI_I}


class SiteRole(Enum):
    DATA = "data"
    ANCILLA = "ancilla"
    DECOY = "decoy"


@dataclass(frozen=True)
class SiteLayout:
    """Ordered sites of the joint register: local dimensions and roles.

    Data sites pair with ancilla sites in order of appearance (first data
    with first ancilla, and so on).  Pairing is demanded by the operations
    that move payloads (swaps, channel retargeting), not by the layout
    itself, so layouts produced by partial traces may carry any role mix.
    """

    dims: tuple[int, ...]
    roles: tuple[SiteRole, ...]

    def __post_init__(self) -> None:
        dims = tuple(int(d) for d in self.dims)
        roles = tuple(self.roles)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "roles", roles)
        if len(dims) != len(roles):
            raise ValueError("dims and roles must have equal length")
        if len(dims) == 0:
            raise ValueError("a layout needs at least one site")
        if any(d < 2 for d in dims):
            raise ValueError("every site dimension must be >= 2")
        if not all(isinstance(r, SiteRole) for r in roles):
            raise ValueError("roles must be SiteRole members")
        joint = math.prod(dims)
        if joint > MAX_JOINT_DIM:
            raise DimensionCapError(
                f"joint dimension {joint} exceeds the cap {MAX_JOINT_DIM}")

    @property
    def dim(self) -> int:
        return math.prod(self.dims)

    @property
    def site_count(self) -> int:
        return len(self.dims)

    def sites_with_role(self, role: SiteRole) -> tuple[int, ...]:
        return tuple(i for i, r in enumerate(self.roles) if r is role)

    def pairs(self) -> tuple[tuple[int, int], ...]:
        """(data site, ancilla site) pairs, matched in order of appearance."""
        data = self.sites_with_role(SiteRole.DATA)
        ancilla = self.sites_with_role(SiteRole.ANCILLA)
        if len(data) != len(ancilla):
            raise ValueError(
                f"{len(data)} data sites cannot pair with {len(ancilla)} ancillas")
        for d, a in zip(data, ancilla):
            if self.dims[d] != self.dims[a]:
                raise ValueError(
                    f"paired sites {d} and {a} differ in dimension "
                    f"({self.dims[d]} vs {self.dims[a]})")
        return tuple(zip(data, ancilla))

    def ancilla_for(self, data_site: int) -> int:
        for d, a in self.pairs():
            if d == data_site:
                return a
        raise ValueError(f"site {data_site} is not a paired data site")

    @classmethod
    def pair(cls, dim: int = 2) -> "SiteLayout":
        """Minimal layout: one data site and its ancilla."""
        return cls(dims=(dim, dim), roles=(SiteRole.DATA, SiteRole.ANCILLA))

    @classmethod
    def network(cls, node_count: int, dim: int = 2,
                decoy_dim: int | None = None) -> "SiteLayout":
        """One (data, ancilla, decoy) triple per node."""
        if node_count < 1:
            raise ValueError("node_count must be >= 1")
        ddim = dim if decoy_dim is None else decoy_dim
        dims = (dim, dim, ddim) * node_count
        roles = (SiteRole.DATA, SiteRole.ANCILLA, SiteRole.DECOY) * node_count
        return cls(dims=dims, roles=roles)


@lru_cache(maxsize=None)
def _digit_table(dims: tuple[int, ...]) -> np.ndarray:
    """``table[s, i]`` is the level of site ``s`` in joint basis state ``i``.

    Joint indices are row major: site 0 varies slowest.
    """
    joint = math.prod(dims)
    table = np.empty((len(dims), joint), dtype=np.intp)
    rem = np.arange(joint)
    for s in range(len(dims) - 1, -1, -1):
        table[s] = rem % dims[s]
        rem = rem // dims[s]
    table.setflags(write=False)
    return table


def _check_sites(layout: SiteLayout, sites: tuple[int, ...]) -> None:
    if len(set(sites)) != len(sites):
        raise ValueError(f"sites must be distinct, got {sites}")
    for s in sites:
        if not 0 <= s < layout.site_count:
            raise ValueError(f"site {s} out of range for {layout.site_count} sites")


def embed_operator(layout: SiteLayout, sites, op: np.ndarray) -> np.ndarray:
    """Embed an operator on ``sites`` into the joint space (identity elsewhere).

    ``op`` acts on the tensor product of the named sites in the order given,
    which need not be contiguous or sorted in the layout.
    """
    sites = tuple(int(s) for s in sites)
    _check_sites(layout, sites)
    op = np.asarray(op, dtype=np.complex128)
    sub_dim = math.prod(layout.dims[s] for s in sites)
    if op.shape != (sub_dim, sub_dim):
        raise ValueError(f"operator shape {op.shape} does not match the "
                         f"target dimension {sub_dim}")
    rest = tuple(s for s in range(layout.site_count) if s not in sites)
    rest_dim = layout.dim // sub_dim
    digits = _digit_table(layout.dims)
    code = np.zeros(layout.dim, dtype=np.intp)
    for s in sites + rest:
        code = code * layout.dims[s] + digits[s]
    big = np.kron(op, np.eye(rest_dim, dtype=np.complex128))
    return big[np.ix_(code, code)]


def expand_vector(layout: SiteLayout, sites, sub: np.ndarray) -> np.ndarray:
    """Joint-space vector carrying ``sub`` on ``sites`` and level 0 elsewhere."""
    sites = tuple(int(s) for s in sites)
    _check_sites(layout, sites)
    sub = np.asarray(sub, dtype=np.complex128).reshape(-1)
    sub_dims = tuple(layout.dims[s] for s in sites)
    sub_dim = math.prod(sub_dims)
    if sub.shape != (sub_dim,):
        raise ValueError(f"vector length {sub.size} does not match the "
                         f"target dimension {sub_dim}")
    strides = []
    for s in sites:
        strides.append(math.prod(layout.dims[s + 1:]))
    sub_digits = _digit_table(sub_dims)
    flat = np.zeros(sub_dim, dtype=np.intp)
    for k, stride in enumerate(strides):
        flat += sub_digits[k] * stride
    full = np.zeros(layout.dim, dtype=np.complex128)
    full[flat] = sub
    return full


def basis_vector(layout: SiteLayout, levels) -> np.ndarray:
    """Joint basis vector with site ``s`` at ``levels[s]``."""
    levels = tuple(int(v) for v in levels)
    if len(levels) != layout.site_count:
        raise ValueError("one level per site required")
    index = 0
    for s, level in enumerate(levels):
        if not 0 <= level < layout.dims[s]:
            raise ValueError(f"level {level} out of range at site {s}")
        index = index * layout.dims[s] + level
    vec = np.zeros(layout.dim, dtype=np.complex128)
    vec[index] = 1.0
    return vec


class DensityState:
    """A density matrix over a layout's joint space.

    With ``validate=True`` (the default for hand-built states) the matrix is
    checked to be Hermitian and unit trace within :data:`ALGEBRA_TOL` and to
    have eigenvalues above :data:`EIGENVALUE_FLOOR`.  Internal evolution
    steps skip the check and re-validate at the boundaries.
    """

    __slots__ = ("layout", "rho")

    def __init__(self, layout: SiteLayout, rho: np.ndarray, *,
                 validate: bool = True):
        rho = np.array(rho, dtype=np.complex128, copy=True)
        if rho.shape != (layout.dim, layout.dim):
            raise ValueError(f"density matrix shape {rho.shape} does not match "
                             f"the joint dimension {layout.dim}")
        if validate:
            if np.abs(rho - rho.conj().T).max() > ALGEBRA_TOL:
                raise ValueError("density matrix must be Hermitian")
            if abs(np.trace(rho).real - 1.0) > ALGEBRA_TOL or \
                    abs(np.trace(rho).imag) > ALGEBRA_TOL:
                raise ValueError("density matrix must have unit trace")
            if np.linalg.eigvalsh(rho).min() < EIGENVALUE_FLOOR:
                raise ValueError("density matrix must be positive semidefinite")
        self.layout = layout
        self.rho = rho

    def validated(self) -> "DensityState":
        """Re-run the full validation on the current matrix."""
        return DensityState(self.layout, self.rho, validate=True)


def product_state(layout: SiteLayout, levels) -> DensityState:
    vec = basis_vector(layout, levels)
    return DensityState(layout, np.outer(vec, vec.conj()), validate=False)


def bell_vector(dim: int = 2) -> np.ndarray:
    """Two-site maximally entangled vector on levels 0 and 1."""
    if dim < 2:
        raise ValueError("dim must be >= 2")
    vec = np.zeros(dim * dim, dtype=np.complex128)
    vec[0] = 1.0 / math.sqrt(2.0)
    vec[dim + 1] = 1.0 / math.sqrt(2.0)
    return vec


def bell_pair(layout: SiteLayout, site_a: int, site_b: int) -> DensityState:
    """Joint state with sites ``a`` and ``b`` maximally entangled, rest at 0."""
    _check_sites(layout, (site_a, site_b))
    vec = expand_vector(layout, (site_a, site_b),
                        _bell_sub(layout.dims[site_a], layout.dims[site_b]))
    return DensityState(layout, np.outer(vec, vec.conj()), validate=False)


def _bell_sub(dim_a: int, dim_b: int) -> np.ndarray:
    """``(|0,0> + |1,1>) / sqrt(2)`` over a ``(dim_a, dim_b)`` pair."""
    vec = np.zeros(dim_a * dim_b, dtype=np.complex128)
    vec[0] = 1.0 / math.sqrt(2.0)
    vec[dim_b + 1] = 1.0 / math.sqrt(2.0)
    return vec


class KrausChannel:
    """A channel given by Kraus operators on a tuple of target sites.

    Operators act on the tensor product of the target sites (in the order
    given) and are checked for completeness on construction: trace-preserving
    channels satisfy ``sum(K^dag K) = 1`` within :data:`ALGEBRA_TOL`;
    selective channels may fall short of the identity but never exceed it.
    """

    __slots__ = ("operators", "target_sites", "trace_preserving")

    def __init__(self, operators, target_sites, *, trace_preserving: bool = True):
        ops = tuple(np.array(k, dtype=np.complex128, copy=True) for k in operators)
        if not ops:
            raise ValueError("a channel needs at least one Kraus operator")
        shape = ops[0].shape
        if len(shape) != 2 or shape[0] != shape[1]:
            raise ValueError("Kraus operators must be square matrices")
        if any(k.shape != shape for k in ops):
            raise ValueError("Kraus operators must share one shape")
        for k in ops:
            k.setflags(write=False)
        total = sum(k.conj().T @ k for k in ops)
        eye = np.eye(shape[0])
        if trace_preserving:
            if np.abs(total - eye).max() > ALGEBRA_TOL:
                raise ValueError("Kraus operators of a trace-preserving "
                                 "channel must satisfy sum(K^dag K) = 1")
        else:
            if np.linalg.eigvalsh(eye - total).min() < -ALGEBRA_TOL:
                raise ValueError("Kraus completeness sum must not exceed 1")
        self.operators = ops
        self.target_sites = tuple(int(s) for s in target_sites)
        self.trace_preserving = bool(trace_preserving)

    @property
    def target_dim(self) -> int:
        return self.operators[0].shape[0]

    def embedded_operators(self, layout: SiteLayout) -> tuple[np.ndarray, ...]:
        """Kraus operators embedded into the layout's joint space."""
        sub_dim = math.prod(layout.dims[s] for s in self.target_sites)
        if sub_dim != self.target_dim:
            raise ValueError(f"channel dimension {self.target_dim} does not "
                             f"match target sites of dimension {sub_dim}")
        return tuple(embed_operator(layout, self.target_sites, k)
                     for k in self.operators)


def apply_unitary(state: DensityState, unitary: np.ndarray, *,
                  validate: bool = False) -> DensityState:
    """Conjugate the state by a joint-space unitary."""
    unitary = np.asarray(unitary, dtype=np.complex128)
    if unitary.shape != (state.layout.dim, state.layout.dim):
        raise ValueError("unitary must act on the joint space")
    rho = unitary @ state.rho @ unitary.conj().T
    return DensityState(state.layout, rho, validate=validate)


def apply_channel(state: DensityState, channel: KrausChannel, *,
                  validate: bool = False) -> DensityState:
    """Apply a trace-preserving channel to the state."""
    if not channel.trace_preserving:
        raise ValueError("apply_channel requires a trace-preserving channel; "
                         "use apply_channel_selective")
    ops = channel.embedded_operators(state.layout)
    rho = sum(k @ state.rho @ k.conj().T for k in ops)
    return DensityState(state.layout, rho, validate=validate)


def apply_channel_selective(state: DensityState, channel: KrausChannel, *,
                            min_probability: float = 1e-12
                            ) -> tuple[DensityState, float]:
    """Apply a selective channel; return the renormalized state and probability."""
    ops = channel.embedded_operators(state.layout)
    rho = sum(k @ state.rho @ k.conj().T for k in ops)
    probability = float(np.trace(rho).real)
    if probability < min_probability:
        raise ValueError(f"selection probability {probability} below "
                         f"{min_probability}; outcome state undefined")
    return DensityState(state.layout, rho / probability, validate=False), probability


def pauli_operator(layout: SiteLayout, axis: str, site: int) -> np.ndarray:
    """Joint-space Pauli on the first two levels of ``site`` (identity above)."""
    try:
        pauli = _PAULIS[axis.lower()]
    except KeyError:
        raise ValueError(f"axis must be one of x, y, z, i; got {axis!r}") from None
    d = layout.dims[site]
    local = np.eye(d, dtype=np.complex128)
    local[:2, :2] = pauli
    return embed_operator(layout, (site,), local)


def exchange_matrix(dim: int) -> np.ndarray:
    """Pair-level permutation ``P``: ``P |a, b> = |b, a>``."""
    if dim < 2:
        raise ValueError("dim must be >= 2")
    p = np.zeros((dim * dim, dim * dim), dtype=np.complex128)
    for a in range(dim):
        for b in range(dim):
            p[a * dim + b, b * dim + a] = 1.0
    return p


def swap_matrix(dim: int = 2) -> np.ndarray:
    """Pair-level payload swap ``i * P`` (unitary, squares to ``-1``)."""
    return 1j * exchange_matrix(dim)


def heisenberg_swap_pair() -> np.ndarray:
    """Qubit payload swap in its exchange-interaction form.

    ``(i/2) * (1 + sigma_x sigma_x + sigma_y sigma_y + sigma_z sigma_z)``
    equals ``i * P`` on a qubit pair; kept as an independent construction of
    the same unitary.
    """
    total = np.kron(PAULI_I, PAULI_I)
    for pauli in (PAULI_X, PAULI_Y, PAULI_Z):
        total = total + np.kron(pauli, pauli)
    return 0.5j * total


def generalized_swap(layout: SiteLayout, data_site: int,
                     ancilla_site: int) -> np.ndarray:
    """Joint-space payload swap between one data site and its ancilla."""
    if layout.dims[data_site] != layout.dims[ancilla_site]:
        raise ValueError("swapped sites must share one dimension")
    return embed_operator(layout, (data_site, ancilla_site),
                          swap_matrix(layout.dims[data_site]))


def full_swap(layout: SiteLayout) -> np.ndarray:
    """Product of the payload swaps over all (data, ancilla) pairs."""
    pairs = layout.pairs()
    if not pairs:
        raise ValueError("layout has no data/ancilla pairs to swap")
    total = np.eye(layout.dim, dtype=np.complex128)
    for data_site, ancilla_site in pairs:
        total = generalized_swap(layout, data_site, ancilla_site) @ total
    return total


def conjugate_channel_by_swap(layout: SiteLayout,
                              channel: KrausChannel) -> KrausChannel:
    """Retarget a data-side channel to the paired ancilla sites.

    Conjugating the channel's action by the payload swap moves it from the
    data registers to the ancilla registers with identical Kraus operators;
    this returns that retargeted channel.
    """
    new_targets = []
    for site in channel.target_sites:
        if layout.roles[site] is not SiteRole.DATA:
            raise ValueError(f"site {site} is not a data site")
        new_targets.append(layout.ancilla_for(site))
    return KrausChannel(channel.operators, tuple(new_targets),
                        trace_preserving=channel.trace_preserving)


def fidelity(state: DensityState, reference: np.ndarray) -> float:
    """Overlap ``<ref| rho |ref>`` with a unit reference vector, in [0, 1]."""
    reference = np.asarray(reference, dtype=np.complex128).reshape(-1)
    if reference.shape != (state.layout.dim,):
        raise ValueError("reference vector must live on the joint space")
    norm = float(np.vdot(reference, reference).real)
    if abs(norm - 1.0) > 1e-8:
        raise ValueError(f"reference vector norm {math.sqrt(norm)} is not 1")
    value = float(np.real(np.vdot(reference, state.rho @ reference)))
    return min(1.0, max(0.0, value))


def purity(state: DensityState) -> float:
    """``tr(rho^2)``, 1 for pure states."""
    return float(np.real(np.trace(state.rho @ state.rho)))


def partial_trace(state: DensityState, keep_sites) -> DensityState:
    """Trace out all sites except ``keep_sites`` (returned in layout order)."""
    keep = tuple(sorted({int(s) for s in keep_sites}))
    if not keep:
        raise ValueError("keep_sites must not be empty")
    _check_sites(state.layout, keep)
    dims = state.layout.dims
    n = len(dims)
    tensor = state.rho.reshape(dims + dims)
    row_labels = list(range(n))
    col_labels = [n + i if i in keep else i for i in range(n)]
    out_labels = [i for i in keep] + [n + i for i in keep]
    reduced = np.einsum(tensor, row_labels + col_labels, out_labels)
    kept_dim = math.prod(dims[i] for i in keep)
    layout = SiteLayout(dims=tuple(dims[i] for i in keep),
                        roles=tuple(state.layout.roles[i] for i in keep))
    return DensityState(layout, reduced.reshape(kept_dim, kept_dim),
                        validate=False)


def superoperator_matrix(map_fn, dim: int) -> np.ndarray:
    """Matrix of a linear operator map in the row-major vec basis.

    Column ``i*dim + j`` holds the image of the matrix unit ``E_ij``
    flattened row major, so two maps are equal as superoperators exactly when
    these matrices agree.
    """
    out = np.empty((dim * dim, dim * dim), dtype=np.complex128)
    for i in range(dim):
        for j in range(dim):
            unit = np.zeros((dim, dim), dtype=np.complex128)
            unit[i, j] = 1.0
            out[:, i * dim + j] = np.asarray(map_fn(unit),
                                             dtype=np.complex128).reshape(-1)
    return out


def channel_superoperator(layout: SiteLayout, channel: KrausChannel) -> np.ndarray:
    """Superoperator matrix of a channel embedded in the layout's joint space."""
    ops = channel.embedded_operators(layout)

    def act(matrix):
        return sum(k @ matrix @ k.conj().T for k in ops)

    return superoperator_matrix(act, layout.dim)


def identity_kraus(dim: int) -> list[np.ndarray]:
    return [np.eye(dim, dtype=np.complex128)]


def erasure_kraus(dim: int) -> list[np.ndarray]:
    """Reset to level 0: ``K_j = |0><j|``; trace preserving for any ``dim``."""
    ops = []
    for j in range(dim):
        k = np.zeros((dim, dim), dtype=np.complex128)
        k[0, j] = 1.0
        ops.append(k)
    return ops


def depolarizing_kraus(strength: float = 1.0) -> list[np.ndarray]:
    """Qubit depolarizing channel; ``strength=1`` sends any state to ``1/2``."""
    if not 0.0 <= strength <= 1.0:
        raise ValueError("strength must lie in [0, 1]")
    return [
        math.sqrt(1.0 - 0.75 * strength) * PAULI_I,
        math.sqrt(0.25 * strength) * PAULI_X,
        math.sqrt(0.25 * strength) * PAULI_Y,
        math.sqrt(0.25 * strength) * PAULI_Z,
    ]


def bit_flip_kraus(probability: float) -> list[np.ndarray]:
    if not 0.0 <= probability <= 1.0:
        raise ValueError("probability must lie in [0, 1]")
    return [math.sqrt(1.0 - probability) * PAULI_I,
            math.sqrt(probability) * PAULI_X]


def phase_flip_kraus(probability: float) -> list[np.ndarray]:
    if not 0.0 <= probability <= 1.0:
        raise ValueError("probability must lie in [0, 1]")
    return [math.sqrt(1.0 - probability) * PAULI_I,
            math.sqrt(probability) * PAULI_Z]


def random_density_matrix(gen: np.random.Generator, dim: int,
                          rank: int | None = None) -> np.ndarray:
    """Random full- or fixed-rank density matrix (Wishart construction)."""
    rank = dim if rank is None else rank
    if not 1 <= rank <= dim:
        raise ValueError("rank must lie in [1, dim]")
    g = gen.normal(size=(dim, rank)) + 1j * gen.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_kraus_channel(gen: np.random.Generator, dim: int, n_operators: int,
                         target_sites) -> KrausChannel:
    """Random trace-preserving channel from a Haar-ish random isometry.

    A complex Gaussian ``(n_operators*dim, dim)`` matrix is orthonormalized
    by QR; its ``dim``-column blocks are the Kraus operators, so the
    completeness sum is the identity by construction.
    """
    if n_operators < 1:
        raise ValueError("n_operators must be >= 1")
    g = gen.normal(size=(n_operators * dim, dim)) \
        + 1j * gen.normal(size=(n_operators * dim, dim))
    q, _ = np.linalg.qr(g)
    ops = [q[i * dim:(i + 1) * dim, :] for i in range(n_operators)]
    return KrausChannel(ops, tuple(target_sites), trace_preserving=True)
