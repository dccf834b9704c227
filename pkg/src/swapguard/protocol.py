"""End-to-end protocol runs: schedule, attacks, state evolution, verdicts.

One run takes a defense schedule and an attack trace over the same horizon
and evolves the network state chronologically.  Payloads live in ancilla
registers between cycles; each on block resets the exposed registers, swaps
the payload into the data registers, holds it online, and swaps it back.
Attack windows fire the malware channel once per exposed site according to
the policy scope; whether an attack actually corrupts the payload depends on
where it lands inside the block.

The machine exploits two exact shortcuts.  First, a block in which no attack
reaches the payload span applies the swap unitary twice with nothing in
between, and the swap squares to a global phase, so both applications can be
skipped.  Second, decoy registers never couple back to the payload registers
(channels and resets are site local), so the decoy channel applications
cannot change any reported quantity and are counted without being applied;
``track_decoys=True`` applies them anyway, which is useful for equivalence
tests.  Both shortcuts leave every report field bit-for-bit intact.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from enum import Enum

import numpy as np

from ._backend import kernels
from .montecarlo import (
    DEFAULT_MAX_ATTEMPTS,
    AttackTrace,
    GapKind,
    LengthKind,
    OnTimeSchedule,
    Phase,
    PhasePlan,
    _check_feasible,
    trial_stream,
)
from .qstate import (
    ALGEBRA_TOL,
    DensityState,
    SiteLayout,
    SiteRole,
    embed_operator,
    erasure_kraus,
    expand_vector,
    fidelity,
    full_swap,
    partial_trace,
)
from .timing import AttackParams, CycleParams

__all__ = [
    "PayloadKind",
    "AttackScope",
    "NetworkConfig",
    "MalwarePolicy",
    "RunReport",
    "SweepResult",
    "ProtocolMachine",
    "run_protocol",
    "sweep_experiment",
]


class PayloadKind(Enum):
    BELL_CHAIN = "bell-chain"
    PRODUCT = "product"
    CUSTOM = "custom"


class AttackScope(Enum):
    """Which sites an attack window may touch.

    ``ONLINE_SITES``: whatever is online when the window lands; decoys during
    inter-block gaps, data registers during blocks.  ``DECOYS_ONLY``: decoys
    during gaps and nothing during blocks (overlaps still count as
    catastrophic).  ``ANY_EXPOSED``: decoys in every window plus data
    registers during blocks.  Ancillas are never in scope.
    """

    ONLINE_SITES = "online-sites"
    DECOYS_ONLY = "decoys-only"
    ANY_EXPOSED = "any-exposed"


@dataclass(frozen=True)
class NetworkConfig:
    """Network shape and the payload it protects.

    Each node contributes a data register, its paired ancilla, and a decoy,
    all of dimension ``level_count`` (decoys may differ via ``decoy_dim``).
    The payload is a joint state of one register per node: a chain of pair
    entangled states on levels 0 and 1 (odd node left at level 0), the all
    zero product, or a custom unit vector.
    """

    node_count: int
    level_count: int = 2
    payload: PayloadKind = PayloadKind.BELL_CHAIN
    custom_payload: np.ndarray | None = None
    decoy_dim: int | None = None

    def __post_init__(self) -> None:
        if self.node_count < 1:
            raise ValueError("node_count must be >= 1")
        if self.level_count < 2:
            raise ValueError("level_count must be >= 2")
        if self.decoy_dim is not None and self.decoy_dim < 2:
            raise ValueError("decoy_dim must be >= 2")
        if (self.custom_payload is not None) != (self.payload is PayloadKind.CUSTOM):
            raise ValueError("custom_payload is required exactly for custom payloads")
        if self.custom_payload is not None:
            vec = np.asarray(self.custom_payload, dtype=np.complex128).reshape(-1)
            expected = self.level_count ** self.node_count
            if vec.shape != (expected,):
                raise ValueError(f"custom payload needs length {expected}, "
                                 f"got {vec.size}")
            if abs(np.vdot(vec, vec).real - 1.0) > 1e-8:
                raise ValueError("custom payload must be a unit vector")
            vec = vec.copy()
            vec.setflags(write=False)
            object.__setattr__(self, "custom_payload", vec)

    def layout(self) -> SiteLayout:
        return SiteLayout.network(self.node_count, self.level_count,
                                  self.decoy_dim)

    def payload_vector(self) -> np.ndarray:
        """Payload as a unit vector over one register per node."""
        d = self.level_count
        if self.payload is PayloadKind.CUSTOM:
            return np.array(self.custom_payload, copy=True)
        if self.payload is PayloadKind.PRODUCT:
            vec = np.zeros(d ** self.node_count, dtype=np.complex128)
            vec[0] = 1.0
            return vec
        bell = np.zeros(d * d, dtype=np.complex128)
        bell[0] = 1.0 / math.sqrt(2.0)
        bell[d + 1] = 1.0 / math.sqrt(2.0)
        vec = np.ones(1, dtype=np.complex128)
        remaining = self.node_count
        while remaining >= 2:
            vec = np.kron(vec, bell)
            remaining -= 2
        if remaining:
            single = np.zeros(d, dtype=np.complex128)
            single[0] = 1.0
            vec = np.kron(vec, single)
        return vec


@dataclass(frozen=True)
class MalwarePolicy:
    """Single-site malware channel template plus its firing scope.

    The same Kraus template is applied independently to every in-scope site
    of an attacked group, so its dimension must match those sites.
    """

    kraus: tuple[np.ndarray, ...]
    scope: AttackScope
    trace_preserving: bool = True

    def __post_init__(self) -> None:
        ops = tuple(np.array(k, dtype=np.complex128, copy=True)
                    for k in self.kraus)
        if not ops:
            raise ValueError("the policy needs at least one Kraus operator")
        dim = ops[0].shape[0] if ops[0].ndim == 2 else 0
        if any(k.ndim != 2 or k.shape != (dim, dim) for k in ops) or dim < 2:
            raise ValueError("Kraus operators must be square matrices of one "
                             "dimension >= 2")
        total = sum(k.conj().T @ k for k in ops)
        gap = np.abs(total - np.eye(dim)).max()
        if self.trace_preserving and gap > ALGEBRA_TOL:
            raise ValueError("policy Kraus operators must satisfy "
                             "sum(K^dag K) = 1")
        if not self.trace_preserving:
            if np.linalg.eigvalsh(np.eye(dim) - total).min() < -ALGEBRA_TOL:
                raise ValueError("Kraus completeness sum must not exceed 1")
        for k in ops:
            k.setflags(write=False)
        object.__setattr__(self, "kraus", ops)
        if not isinstance(self.scope, AttackScope):
            raise ValueError("scope must be an AttackScope member")

    @property
    def dim(self) -> int:
        return self.kraus[0].shape[0]


@dataclass(frozen=True)
class RunReport:
    """Outcome of one protocol run."""

    final_fidelity: float
    overlap_count: int
    hit_phases: dict[Phase, int]
    decoy_attacks_absorbed: int
    catastrophic: bool


@dataclass(frozen=True)
class SweepResult:
    """Aggregates over a sweep of independent protocol trials."""

    catastrophe_rate: float
    catastrophe_stderr: float
    mean_fidelity: float
    fidelity_stderr: float
    mean_overlaps: float
    mean_absorbed: float
    trials: int


_RESET, _SWAP_IN, _SWAP_OUT, _ATTACK_DATA, _ATTACK_DECOYS = range(5)


class ProtocolMachine:
    """Reusable operators and initial state for one (config, policy) pair."""

    def __init__(self, config: NetworkConfig, policy: MalwarePolicy, *,
                 exact_skip: bool = True, track_decoys: bool = False):
        layout = config.layout()
        self.config = config
        self.policy = policy
        self.layout = layout
        self.exact_skip = bool(exact_skip)
        self.track_decoys = bool(track_decoys)
        self._data_sites = layout.sites_with_role(SiteRole.DATA)
        self._ancilla_sites = layout.sites_with_role(SiteRole.ANCILLA)
        self._decoy_sites = layout.sites_with_role(SiteRole.DECOY)
        self._swap = full_swap(layout)
        self._payload = config.payload_vector()
        init_vec = expand_vector(layout, self._ancilla_sites, self._payload)
        self._initial_rho = np.outer(init_vec, init_vec.conj())

        attacks_data = policy.scope in (AttackScope.ONLINE_SITES,
                                        AttackScope.ANY_EXPOSED)
        self._data_attack_ops = tuple(
            self._embed_all(site, policy.kraus) for site in self._data_sites
        ) if attacks_data else ()
        self._decoy_attack_ops = tuple(
            self._embed_all(site, policy.kraus) for site in self._decoy_sites
        ) if track_decoys else ()
        if not track_decoys:
            # Dimension compatibility is still enforced even though the decoy
            # applications are elided.
            for site in self._decoy_sites:
                if layout.dims[site] != policy.dim:
                    raise ValueError(
                        f"policy dimension {policy.dim} does not match decoy "
                        f"site {site} of dimension {layout.dims[site]}")
        self._data_reset_ops = tuple(
            self._embed_all(site, erasure_kraus(layout.dims[site]))
            for site in self._data_sites)
        self._decoy_reset_ops = tuple(
            self._embed_all(site, erasure_kraus(layout.dims[site]))
            for site in self._decoy_sites) if track_decoys else ()

    def _embed_all(self, site: int, kraus) -> tuple[np.ndarray, ...]:
        dim = self.layout.dims[site]
        ops = tuple(np.asarray(k, dtype=np.complex128) for k in kraus)
        if any(k.shape != (dim, dim) for k in ops):
            raise ValueError(f"policy dimension {ops[0].shape[0]} does not "
                             f"match site {site} of dimension {dim}")
        return tuple(embed_operator(self.layout, (site,), k) for k in ops)

    @staticmethod
    def _apply_site_ops(rho: np.ndarray, per_site_ops) -> np.ndarray:
        for ops in per_site_ops:
            if len(ops) == 1:
                k = ops[0]
                rho = k @ rho @ k.conj().T
            else:
                rho = sum(k @ rho @ k.conj().T for k in ops)
        return rho

    def run(self, schedule: OnTimeSchedule, trace: AttackTrace) -> RunReport:
        report, _ = self._run_impl(schedule, trace, keep_state=False)
        return report

    def run_with_state(self, schedule: OnTimeSchedule,
                       trace: AttackTrace) -> tuple[RunReport, DensityState]:
        """Like :meth:`run`, also returning the final ancilla reduced state."""
        return self._run_impl(schedule, trace, keep_state=True)

    def _run_impl(self, schedule: OnTimeSchedule, trace: AttackTrace, *,
                  keep_state: bool):
        if schedule.horizon != trace.horizon:
            raise ValueError(f"schedule horizon {schedule.horizon} != "
                             f"trace horizon {trace.horizon}")
        cycle = schedule.cycle
        block = cycle.duration
        if block <= 0.0:
            raise ValueError("protocol runs need a positive cycle duration")
        plan = PhasePlan(cycle)
        arrival = plan.payload_arrival
        on = schedule.on_times
        n_blocks = on.size
        windows = trace.windows
        scope = self.policy.scope

        events: list[tuple[float, int, int, int]] = []
        seq = 0
        for i in range(n_blocks):
            start = float(on[i])
            events.append((start, seq, _RESET, i))
            events.append((start + arrival, seq + 1, _SWAP_IN, i))
            events.append((start + block, seq + 2, _SWAP_OUT, i))
            seq += 3

        overlap_count = 0
        hit_phases: Counter[Phase] = Counter()
        payload_attacked = np.zeros(n_blocks, dtype=bool)
        decoy_hits = 0
        lo = 0
        for window_start, window_end in windows:
            if window_end <= window_start:
                continue
            while lo < n_blocks and on[lo] + block <= window_start:
                lo += 1
            k = lo
            while k < n_blocks and on[k] < window_end:
                inter_start = max(float(on[k]), float(window_start))
                overlap_count += 1
                hit_phases[plan.phase_at(inter_start - float(on[k]))] += 1
                if scope in (AttackScope.ONLINE_SITES, AttackScope.ANY_EXPOSED):
                    pay_start = float(on[k]) + arrival
                    block_end = float(on[k]) + block
                    sub_start = max(float(window_start), pay_start)
                    if sub_start < min(float(window_end), block_end):
                        # The window reaches the span where the payload sits
                        # in the data registers; fire there.
                        payload_attacked[k] = True
                        fire_time = sub_start
                    else:
                        fire_time = inter_start
                    events.append((fire_time, seq, _ATTACK_DATA, k))
                    seq += 1
                k += 1
            if scope is AttackScope.ANY_EXPOSED:
                decoy_time = float(window_start)
            else:
                decoy_time = self._first_uncovered(
                    float(window_start), float(window_end), on, block)
            if decoy_time is not None:
                events.append((decoy_time, seq, _ATTACK_DECOYS, -1))
                seq += 1
                decoy_hits += 1

        events.sort(key=lambda e: (e[0], e[1]))

        rho = self._initial_rho
        touched = False
        data_dirty = False
        decoys_dirty = False
        swap = self._swap
        for _time, _seq, kind, arg in events:
            if kind == _RESET:
                if data_dirty:
                    rho = self._apply_site_ops(rho, self._data_reset_ops)
                    data_dirty = False
                    touched = True
                if decoys_dirty and self.track_decoys:
                    rho = self._apply_site_ops(rho, self._decoy_reset_ops)
                    touched = True
                decoys_dirty = False
            elif kind in (_SWAP_IN, _SWAP_OUT):
                if not (self.exact_skip and not payload_attacked[arg]):
                    rho = swap @ rho @ swap.conj().T
                    touched = True
            elif kind == _ATTACK_DATA:
                rho = self._apply_site_ops(rho, self._data_attack_ops)
                data_dirty = True
                touched = True
            else:  # _ATTACK_DECOYS
                if self.track_decoys:
                    rho = self._apply_site_ops(rho, self._decoy_attack_ops)
                    touched = True
                decoys_dirty = True

        reduced = None
        if touched:
            state = DensityState(self.layout, rho, validate=False)
            reduced = partial_trace(state, self._ancilla_sites)
            final_fidelity = fidelity(reduced, self._payload)
        else:
            final_fidelity = 1.0
        if keep_state and reduced is None:
            state = DensityState(self.layout, rho, validate=False)
            reduced = partial_trace(state, self._ancilla_sites)
        report = RunReport(
            final_fidelity=final_fidelity,
            overlap_count=overlap_count,
            hit_phases=dict(hit_phases),
            decoy_attacks_absorbed=decoy_hits,
            catastrophic=overlap_count > 0,
        )
        return report, reduced

    @staticmethod
    def _first_uncovered(window_start: float, window_end: float,
                         on: np.ndarray, block: float) -> float | None:
        """Earliest time in the window not covered by any block, if any."""
        candidate = window_start
        n = on.size
        while candidate < window_end:
            idx = int(np.searchsorted(on, candidate, side="right")) - 1
            if idx >= 0 and block > 0.0 and on[idx] <= candidate < on[idx] + block:
                candidate = float(on[idx]) + block
                continue
            return candidate
        return None


def run_protocol(config: NetworkConfig, schedule: OnTimeSchedule,
                 trace: AttackTrace, policy: MalwarePolicy, *,
                 exact_skip: bool = True,
                 track_decoys: bool = False) -> RunReport:
    """Run one protocol timeline; see :class:`ProtocolMachine`."""
    machine = ProtocolMachine(config, policy, exact_skip=exact_skip,
                              track_decoys=track_decoys)
    return machine.run(schedule, trace)


def sweep_experiment(seed: int, config: NetworkConfig, policy: MalwarePolicy,
                     horizon: float, on_count: int, cycle: CycleParams,
                     attack: AttackParams,
                     gap_kind: GapKind = GapKind.EXPONENTIAL,
                     length_kind: LengthKind = LengthKind.FIXED,
                     trials: int = 1000, *,
                     max_attempts: int = DEFAULT_MAX_ATTEMPTS,
                     exact_skip: bool = True) -> SweepResult:
    """Run independent protocol trials and aggregate the reports.

    Each trial draws a fresh schedule and a fresh attack trace from the trial
    stream ``(seed, index)`` (schedule first), runs the protocol, and records
    the catastrophe flag and final fidelity.  The randomness discipline
    matches the Monte Carlo estimators, so a trial can be replayed in
    isolation with the same draws.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    block = cycle.duration
    if block <= 0.0:
        raise ValueError("protocol runs need a positive cycle duration")
    if not (math.isfinite(horizon) and horizon > 0):
        raise ValueError(f"horizon must be > 0, got {horizon!r}")
    if gap_kind is GapKind.SINGLE_WINDOW:
        if attack.mean_length > horizon:
            raise ValueError("single-window length must not exceed the horizon")
        if length_kind is not LengthKind.FIXED:
            raise ValueError("single-window traces use a fixed length")
    _check_feasible(horizon, on_count, block)
    machine = ProtocolMachine(config, policy, exact_skip=exact_skip)

    catastrophes = 0
    overlaps_total = 0
    absorbed_total = 0
    fidelities = np.empty(trials)
    for index in range(trials):
        gen = trial_stream(seed, index)
        times = kernels.sample_on_times(gen, horizon, on_count, block,
                                        max_attempts)
        windows = kernels.sample_attacks(gen, horizon, attack.mean_interval,
                                         attack.mean_length, gap_kind.code,
                                         length_kind.code)
        schedule = OnTimeSchedule(horizon=horizon, cycle=cycle, on_times=times)
        trace = AttackTrace(horizon=horizon, windows=windows,
                            gap_kind=gap_kind, length_kind=length_kind,
                            params=attack)
        report = machine.run(schedule, trace)
        catastrophes += int(report.catastrophic)
        overlaps_total += report.overlap_count
        absorbed_total += report.decoy_attacks_absorbed
        fidelities[index] = report.final_fidelity

    rate = catastrophes / trials
    rate_stderr = math.sqrt(rate * (1.0 - rate) / trials)
    mean_fidelity = float(fidelities.mean())
    if trials > 1:
        fidelity_stderr = float(fidelities.std(ddof=1) / math.sqrt(trials))
    else:
        fidelity_stderr = 0.0
    return SweepResult(
        catastrophe_rate=rate,
        catastrophe_stderr=rate_stderr,
        mean_fidelity=mean_fidelity,
        fidelity_stderr=fidelity_stderr,
        mean_overlaps=overlaps_total / trials,
        mean_absorbed=absorbed_total / trials,
        trials=trials,
    )
