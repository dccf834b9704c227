"""Command-line interface.

Subcommands
-----------
``analyze``
    Closed-form timing table over a grid of on counts, emitted as CSV.
``simulate-timing``
    Monte Carlo estimate against the matching closed form with a 3-sigma
    acceptance verdict, emitted as a JSON report.
``simulate-quantum``
    End-to-end protocol sweep (schedule, attacks, state evolution), emitted
    as a JSON report.
``verify-algebra``
    Residual battery over the swap and channel identities, emitted as a JSON
    report; fails when any residual exceeds the algebra tolerance.
``shares split`` / ``shares reconstruct``
    Threshold-share a schedule seed into per-party files, and recover the
    seed plus the first on times from a quorum of files.

Exit codes: 0 success, 1 acceptance or verification failure, 2 configuration
or usage error.  Reports are deterministic byte for byte for a fixed config
and seed: no timestamps, sorted keys, and floats serialized with 17
significant digits in CSV (JSON uses the shortest exact representation).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import fock, montecarlo, protocol, qstate, secret, timing
from ._backend import BACKEND
from .errors import (
    DimensionCapError,
    FeasibilityError,
    QuorumError,
    RejectionCapError,
)

__all__ = ["main", "ConfigError"]

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2

CONFIG_VERSION = 1
Z_LIMIT = 3.0


class ConfigError(ValueError):
    """A configuration problem, with the offending field path in the message."""


# ---------------------------------------------------------------------------
# config primitives


def _load_config(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            data = json.load(handle)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path!r} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config {path!r} must hold a JSON object")
    return data


def _join(path: str, key: str) -> str:
    return f"{path}.{key}" if path else key


def _reject_unknown(obj: dict, allowed, path: str) -> None:
    unknown = sorted(set(obj) - set(allowed))
    if unknown:
        where = _join(path, unknown[0])
        raise ConfigError(f"{where}: unknown field")


def _fetch(obj: dict, key: str, path: str, *, required: bool, default=None):
    if key in obj:
        return obj[key]
    if required:
        raise ConfigError(f"{_join(path, key)}: required field is missing")
    return default


def _number(obj: dict, key: str, path: str, *, required: bool = True,
            default: float | None = None, minimum: float | None = None,
            exclusive_minimum: float | None = None,
            maximum: float | None = None) -> float:
    value = _fetch(obj, key, path, required=required, default=default)
    where = _join(path, key)
    if value is None:
        return None
    if type(value) is bool or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}: must be a number")
    value = float(value)
    if not math.isfinite(value):
        raise ConfigError(f"{where}: must be finite")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{where}: must be >= {minimum}")
    if exclusive_minimum is not None and value <= exclusive_minimum:
        raise ConfigError(f"{where}: must be > {exclusive_minimum}")
    if maximum is not None and value > maximum:
        raise ConfigError(f"{where}: must be <= {maximum}")
    return value


def _integer(obj: dict, key: str, path: str, *, required: bool = True,
             default: int | None = None, minimum: int | None = None,
             maximum: int | None = None) -> int:
    value = _fetch(obj, key, path, required=required, default=default)
    where = _join(path, key)
    if value is None:
        return None
    if type(value) is bool or not isinstance(value, int):
        raise ConfigError(f"{where}: must be an integer")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{where}: must be >= {minimum}")
    if maximum is not None and value > maximum:
        raise ConfigError(f"{where}: must be <= {maximum}")
    return value


def _string(obj: dict, key: str, path: str, *, choices=None,
            required: bool = True, default: str | None = None) -> str:
    value = _fetch(obj, key, path, required=required, default=default)
    where = _join(path, key)
    if value is None:
        return None
    if not isinstance(value, str):
        raise ConfigError(f"{where}: must be a string")
    if choices is not None and value not in choices:
        raise ConfigError(f"{where}: must be one of {sorted(choices)}")
    return value


def _section(obj: dict, key: str, path: str, *, required: bool = True) -> dict:
    value = _fetch(obj, key, path, required=required, default=None)
    where = _join(path, key)
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise ConfigError(f"{where}: must be an object")
    return value


def _int_list(obj: dict, key: str, path: str, *, minimum: int | None = None,
              required: bool = True, default=None) -> list[int]:
    value = _fetch(obj, key, path, required=required, default=default)
    where = _join(path, key)
    if value is None:
        return None
    if not isinstance(value, list) or not value:
        raise ConfigError(f"{where}: must be a nonempty list")
    out = []
    for i, item in enumerate(value):
        if type(item) is bool or not isinstance(item, int):
            raise ConfigError(f"{where}[{i}]: must be an integer")
        if minimum is not None and item < minimum:
            raise ConfigError(f"{where}[{i}]: must be >= {minimum}")
        out.append(item)
    return out


def _float_list(obj: dict, key: str, path: str, *, required: bool = True,
                default=None) -> list[float]:
    value = _fetch(obj, key, path, required=required, default=default)
    where = _join(path, key)
    if value is None:
        return None
    if not isinstance(value, list) or not value:
        raise ConfigError(f"{where}: must be a nonempty list")
    out = []
    for i, item in enumerate(value):
        if type(item) is bool or not isinstance(item, (int, float)) \
                or not math.isfinite(float(item)):
            raise ConfigError(f"{where}[{i}]: must be a finite number")
        out.append(float(item))
    return out


def _check_version(cfg: dict) -> None:
    version = _integer(cfg, "version", "", minimum=1)
    if version != CONFIG_VERSION:
        raise ConfigError(f"version: unsupported config version {version}; "
                          f"this build reads version {CONFIG_VERSION}")


# ---------------------------------------------------------------------------
# shared config sections


def _parse_cycle(obj: dict, path: str) -> timing.CycleParams:
    _reject_unknown(obj, {"online", "swap", "reset"}, path)
    return timing.CycleParams(
        online=_number(obj, "online", path, minimum=0.0),
        swap=_number(obj, "swap", path, minimum=0.0),
        reset=_number(obj, "reset", path, minimum=0.0),
    )


def _parse_timing(cfg: dict, path: str = "timing", *,
                  need_on_count: bool = True):
    obj = _section(cfg, "timing", "")
    allowed = {"horizon", "cycle"} | ({"on_count"} if need_on_count else set())
    _reject_unknown(obj, allowed, path)
    horizon = _number(obj, "horizon", path, exclusive_minimum=0.0)
    cycle = _parse_cycle(_section(obj, "cycle", path), _join(path, "cycle"))
    if need_on_count:
        on_count = _integer(obj, "on_count", path, minimum=0)
        return horizon, on_count, cycle
    return horizon, cycle


_GAP_CHOICES = {k.value for k in montecarlo.GapKind}
_LENGTH_CHOICES = {k.value for k in montecarlo.LengthKind}


def _parse_attack(cfg: dict, path: str = "attack", *, with_kinds: bool = True):
    obj = _section(cfg, "attack", "")
    allowed = {"mean_interval", "mean_length"}
    if with_kinds:
        allowed |= {"gap_kind", "length_kind"}
    _reject_unknown(obj, allowed, path)
    params = timing.AttackParams(
        mean_interval=_number(obj, "mean_interval", path, exclusive_minimum=0.0),
        mean_length=_number(obj, "mean_length", path, exclusive_minimum=0.0),
    )
    if not with_kinds:
        return params
    gap_kind = montecarlo.GapKind(_string(
        obj, "gap_kind", path, choices=_GAP_CHOICES, required=False,
        default=montecarlo.GapKind.EXPONENTIAL.value))
    length_kind = montecarlo.LengthKind(_string(
        obj, "length_kind", path, choices=_LENGTH_CHOICES, required=False,
        default=montecarlo.LengthKind.FIXED.value))
    return params, gap_kind, length_kind


def _parse_network(cfg: dict, path: str = "network") -> protocol.NetworkConfig:
    obj = _section(cfg, "network", "")
    _reject_unknown(obj, {"node_count", "level_count", "payload", "decoy_dim"},
                    path)
    payload = _string(obj, "payload", path,
                      choices={"bell-chain", "product"}, required=False,
                      default="bell-chain")
    try:
        return protocol.NetworkConfig(
            node_count=_integer(obj, "node_count", path, minimum=1),
            level_count=_integer(obj, "level_count", path, required=False,
                                 default=2, minimum=2),
            payload=protocol.PayloadKind(payload),
            decoy_dim=_integer(obj, "decoy_dim", path, required=False,
                               default=None, minimum=2),
        )
    except (ValueError, DimensionCapError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc


_CHANNEL_BUILDERS = {
    "depolarizing": lambda strength, dim: qstate.depolarizing_kraus(strength),
    "bit-flip": lambda strength, dim: qstate.bit_flip_kraus(strength),
    "phase-flip": lambda strength, dim: qstate.phase_flip_kraus(strength),
    "erasure": lambda strength, dim: qstate.erasure_kraus(dim),
}

_QUBIT_ONLY_CHANNELS = {"depolarizing", "bit-flip", "phase-flip"}


def _parse_policy(cfg: dict, level_count: int,
                  path: str = "policy") -> protocol.MalwarePolicy:
    obj = _section(cfg, "policy", "")
    _reject_unknown(obj, {"channel", "strength", "scope", "dim"}, path)
    channel = _string(obj, "channel", path, choices=set(_CHANNEL_BUILDERS))
    strength = _number(obj, "strength", path, required=False, default=1.0,
                       minimum=0.0, maximum=1.0)
    scope = _string(obj, "scope", path,
                    choices={s.value for s in protocol.AttackScope})
    dim = _integer(obj, "dim", path, required=False, default=level_count,
                   minimum=2)
    if channel in _QUBIT_ONLY_CHANNELS and dim != 2:
        raise ConfigError(f"{_join(path, 'channel')}: {channel} is a qubit "
                          f"channel; it needs dim 2, got {dim}")
    kraus = _CHANNEL_BUILDERS[channel](strength, dim)
    return protocol.MalwarePolicy(kraus=tuple(kraus),
                                  scope=protocol.AttackScope(scope))


# ---------------------------------------------------------------------------
# output helpers


def _format_float(value: float) -> str:
    return f"{value:.17g}"


def _dump_json(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def _emit(text: str, out_dir: str | None, filename: str) -> None:
    if out_dir is None:
        sys.stdout.write(text)
        return
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, filename), "w", encoding="utf-8",
              newline="") as handle:
        handle.write(text)


def _z_score(estimate: float, stderr: float,
             reference: float) -> tuple[float | None, bool]:
    """Standard score and the 3-sigma acceptance verdict.

    A zero standard error accepts only an exact match (and reports a null
    score on mismatch, since the ratio is undefined).
    """
    if stderr == 0.0:
        if estimate == reference:
            return 0.0, True
        return None, False
    z = (estimate - reference) / stderr
    return z, abs(z) <= Z_LIMIT


# ---------------------------------------------------------------------------
# analyze


def _cmd_analyze(args) -> int:
    cfg = _load_config(args.config)
    _reject_unknown(cfg, {"version", "timing", "attack", "grid",
                          "safety_fraction"}, "")
    _check_version(cfg)
    horizon, cycle = _parse_timing(cfg, need_on_count=False)
    attack = _parse_attack(cfg, with_kinds=False)
    grid = _section(cfg, "grid", "")
    _reject_unknown(grid, {"on_counts"}, "grid")
    on_counts = _int_list(grid, "on_counts", "grid", minimum=0)
    safety = _number(cfg, "safety_fraction", "", required=False, default=0.1,
                     exclusive_minimum=0.0)

    tau = cycle.duration
    delta = attack.mean_length
    theta = attack.mean_interval
    lines = ["on_count,window_miss,total_miss,overlap_prob,"
             "overlap_prob_limit,expected_overlaps,on_time_bound"]
    bound = timing.on_time_bound(delta, theta, tau) * safety
    for m in on_counts:
        miss_one = timing.window_miss_probability(horizon, delta, tau)
        miss_all = timing.total_miss_probability(miss_one, m)
        overlap = timing.catastrophe_probability(horizon, m, delta, tau)
        limit = timing.catastrophe_probability_limit(m / horizon, delta, tau)
        expected = timing.expected_overlap_count(horizon, theta, delta, tau, m)
        lines.append(",".join([
            str(m),
            _format_float(miss_one),
            _format_float(miss_all),
            _format_float(overlap),
            _format_float(limit),
            _format_float(expected),
            _format_float(bound),
        ]))
    _emit("\n".join(lines) + "\n", args.out, "analysis.csv")
    return EXIT_OK


# ---------------------------------------------------------------------------
# simulate-timing


def _cmd_simulate_timing(args) -> int:
    cfg = _load_config(args.config)
    _reject_unknown(cfg, {"version", "seed", "trials", "estimator", "timing",
                          "attack", "workers"}, "")
    _check_version(cfg)
    estimator = _string(cfg, "estimator", "",
                        choices={"single-window", "expected-overlaps"})
    seed = args.seed if args.seed is not None else \
        _integer(cfg, "seed", "", minimum=0)
    trials = args.trials if args.trials is not None else \
        _integer(cfg, "trials", "", minimum=1)
    if trials < 1:
        raise ConfigError("trials: must be >= 1")
    workers = _integer(cfg, "workers", "", required=False, default=1,
                       minimum=1)
    horizon, on_count, cycle = _parse_timing(cfg)
    tau = cycle.duration

    if estimator == "single-window":
        attack = _parse_attack(cfg, with_kinds=False)
        delta = attack.mean_length
        est = montecarlo.estimate_no_overlap_single_window(
            seed, horizon, on_count, cycle, delta, trials, workers=workers)
        reference = timing.total_miss_probability(
            timing.window_miss_probability(horizon, delta, tau), on_count)
    else:
        attack, gap_kind, length_kind = _parse_attack(cfg)
        est = montecarlo.estimate_expected_overlaps(
            seed, horizon, on_count, cycle, attack, gap_kind, length_kind,
            trials, workers=workers)
        reference = timing.expected_overlap_count(
            horizon, attack.mean_interval, attack.mean_length, tau, on_count)

    z, accepted = _z_score(est.value, est.stderr, reference)
    report = {
        "version": CONFIG_VERSION,
        "backend": BACKEND,
        "estimator": estimator,
        "seed": seed,
        "trials": trials,
        "estimate": est.value,
        "stderr": est.stderr,
        "reference": reference,
        "z_score": z,
        "z_limit": Z_LIMIT,
        "acceptance": accepted,
    }
    _emit(_dump_json(report), args.out, "timing_report.json")
    return EXIT_OK if accepted else EXIT_FAILURE


# ---------------------------------------------------------------------------
# simulate-quantum


def _cmd_simulate_quantum(args) -> int:
    cfg = _load_config(args.config)
    _reject_unknown(cfg, {"version", "seed", "trials", "network", "policy",
                          "timing", "attack"}, "")
    _check_version(cfg)
    seed = args.seed if args.seed is not None else \
        _integer(cfg, "seed", "", minimum=0)
    trials = args.trials if args.trials is not None else \
        _integer(cfg, "trials", "", minimum=1)
    if trials < 1:
        raise ConfigError("trials: must be >= 1")
    network = _parse_network(cfg)
    policy = _parse_policy(cfg, network.level_count)
    horizon, on_count, cycle = _parse_timing(cfg)
    attack, gap_kind, length_kind = _parse_attack(cfg)

    result = protocol.sweep_experiment(
        seed, network, policy, horizon, on_count, cycle, attack, gap_kind,
        length_kind, trials)

    if gap_kind is montecarlo.GapKind.SINGLE_WINDOW:
        reference = timing.catastrophe_probability(
            horizon, on_count, attack.mean_length, cycle.duration)
        z, accepted = _z_score(result.catastrophe_rate,
                               result.catastrophe_stderr, reference)
    else:
        reference = None
        z, accepted = None, True
    report = {
        "version": CONFIG_VERSION,
        "backend": BACKEND,
        "seed": seed,
        "trials": trials,
        "catastrophe_rate": result.catastrophe_rate,
        "catastrophe_stderr": result.catastrophe_stderr,
        "mean_fidelity": result.mean_fidelity,
        "fidelity_stderr": result.fidelity_stderr,
        "mean_overlaps": result.mean_overlaps,
        "mean_absorbed": result.mean_absorbed,
        "reference_rate": reference,
        "z_score": z,
        "z_limit": Z_LIMIT,
        "acceptance": accepted,
    }
    _emit(_dump_json(report), args.out, "quantum_report.json")
    return EXIT_OK if accepted else EXIT_FAILURE


# ---------------------------------------------------------------------------
# verify-algebra


_VERIFY_DEFAULTS = {
    "seed": 2026,
    "dims": [2, 3],
    "kraus_counts": [1, 2, 4],
    "states_per_case": 3,
    "boson_cutoff": 3,
    "angles": [0.0, math.pi / 6, math.pi / 4, math.pi / 2],
    "perturbation": 0.0,
}


def _verify_residuals(seed: int, dims: list[int], kraus_counts: list[int],
                      states_per_case: int, boson_cutoff: int,
                      angles: list[float], perturbation: float) -> dict:
    """Residuals of the operator identities; all vanish for exact algebra.

    ``perturbation`` adds a deliberate defect to the swap construction so the
    harness itself can be shown to catch broken algebra.
    """
    import scipy.linalg

    gen = np.random.default_rng(seed)
    residuals: dict[str, float] = {}

    def defect(matrix: np.ndarray) -> np.ndarray:
        if perturbation:
            matrix = matrix.copy()
            matrix[0, 0] += perturbation
        return matrix

    for d in dims:
        exchange = qstate.exchange_matrix(d)
        swap = defect(qstate.swap_matrix(d))
        eye = np.eye(d * d)
        residuals[f"swap_unitary_d{d}"] = float(
            np.abs(swap.conj().T @ swap - eye).max())
        residuals[f"swap_square_d{d}"] = float(np.abs(swap @ swap + eye).max())
        residuals[f"swap_exponential_d{d}"] = float(np.abs(
            scipy.linalg.expm(1j * (math.pi / 2.0) * exchange) - swap).max())

        layout = qstate.SiteLayout.pair(d)
        big_swap = defect(qstate.full_swap(layout))
        for n_kraus in kraus_counts:
            channel = qstate.random_kraus_channel(gen, d, n_kraus, (0,))
            embedded = channel.embedded_operators(layout)

            def conjugated(matrix):
                moved = big_swap @ matrix @ big_swap.conj().T
                hit = sum(k @ moved @ k.conj().T for k in embedded)
                return big_swap.conj().T @ hit @ big_swap

            super_a = qstate.superoperator_matrix(conjugated, layout.dim)
            retargeted = qstate.conjugate_channel_by_swap(layout, channel)
            super_b = qstate.channel_superoperator(layout, retargeted)
            residuals[f"conjugation_superop_d{d}_k{n_kraus}"] = float(
                np.abs(super_a - super_b).max())

            worst = 0.0
            for _ in range(states_per_case):
                rho = qstate.random_density_matrix(gen, layout.dim)
                direct = conjugated(rho)
                via = sum(k @ rho @ k.conj().T
                          for k in retargeted.embedded_operators(layout))
                worst = max(worst, float(np.abs(direct - via).max()))
            residuals[f"conjugation_states_d{d}_k{n_kraus}"] = worst

    residuals["heisenberg_form"] = float(np.abs(
        qstate.heisenberg_swap_pair() - qstate.swap_matrix(2)).max())

    fermions = fock.FockRegister.particle_pair(fock.Statistics.FERMIONIC)
    bosons = fock.FockRegister.particle_pair(fock.Statistics.BOSONIC,
                                             n_max=boson_cutoff)
    for angle in angles:
        tag = f"{angle:.6f}"
        residuals[f"bch_fermionic_t{tag}"] = fock.bch_identity_residual(
            fermions, 0, 2, angle)
        residuals[f"bch_bosonic_t{tag}"] = fock.bch_identity_residual(
            bosons, 0, 2, angle)

    worst = 0.0
    for k in range(2):
        for l in range(2):
            for m in range(2):
                for n in range(2):
                    monomial = fock.LadderMonomial(k, l, m, n)
                    shifted = fock.shift_monomial(fermions, monomial)
                    target = fock.monomial_matrix(fermions, 1, monomial)
                    worst = max(worst, float(np.abs(shifted - target).max()))
    residuals["fermionic_shift_monomials"] = worst

    def pair_encoding(register):
        columns = []
        for alpha in range(2):
            for beta in range(2):
                data_op = register.create(register.particle_modes(0)[alpha])
                ancilla_op = register.create(register.particle_modes(1)[beta])
                columns.append(data_op @ ancilla_op @ register.vacuum_vector())
        return np.column_stack(columns)

    exchange2 = qstate.exchange_matrix(2)
    encoding_f = pair_encoding(fermions)
    restricted_f = encoding_f.conj().T @ fock.particle_swap(fermions) @ encoding_f
    residuals["particle_swap_fermionic"] = float(
        np.abs(restricted_f - exchange2).max())
    encoding_b = pair_encoding(bosons)
    restricted_b = encoding_b.conj().T @ fock.particle_swap(bosons) @ encoding_b
    residuals["particle_swap_bosonic"] = float(
        np.abs(restricted_b + exchange2).max())
    return residuals


def _cmd_verify_algebra(args) -> int:
    if args.config is not None:
        cfg = _load_config(args.config)
        _reject_unknown(cfg, {"version"} | set(_VERIFY_DEFAULTS), "")
        _check_version(cfg)
    else:
        cfg = {"version": CONFIG_VERSION}
    seed = _integer(cfg, "seed", "", required=False,
                    default=_VERIFY_DEFAULTS["seed"], minimum=0)
    dims = _int_list(cfg, "dims", "", minimum=2, required=False,
                     default=_VERIFY_DEFAULTS["dims"])
    if any(d > 64 for d in dims):
        raise ConfigError("dims: pair spaces above dimension 64 exceed the "
                          "joint-dimension cap")
    kraus_counts = _int_list(cfg, "kraus_counts", "", minimum=1,
                             required=False,
                             default=_VERIFY_DEFAULTS["kraus_counts"])
    states = _integer(cfg, "states_per_case", "", required=False,
                      default=_VERIFY_DEFAULTS["states_per_case"], minimum=1)
    # The single-excitation encodings fill a mode pair with two quanta, so
    # the truncation must leave room for that.
    cutoff = _integer(cfg, "boson_cutoff", "", required=False,
                      default=_VERIFY_DEFAULTS["boson_cutoff"], minimum=2,
                      maximum=7)
    angles = _float_list(cfg, "angles", "", required=False,
                         default=_VERIFY_DEFAULTS["angles"])
    perturbation = _number(cfg, "perturbation", "", required=False,
                           default=0.0, minimum=0.0)

    residuals = _verify_residuals(seed, dims, kraus_counts, states, cutoff,
                                  angles, perturbation)
    worst = max(residuals.values())
    accepted = worst < qstate.ALGEBRA_TOL
    report = {
        "version": CONFIG_VERSION,
        "seed": seed,
        "tolerance": qstate.ALGEBRA_TOL,
        "max_residual": worst,
        "acceptance": accepted,
        "residuals": residuals,
    }
    _emit(_dump_json(report), args.out, "algebra_report.json")
    return EXIT_OK if accepted else EXIT_FAILURE


# ---------------------------------------------------------------------------
# shares


def _cmd_shares_split(args) -> int:
    cfg = _load_config(args.config)
    _reject_unknown(cfg, {"version", "seed", "shares"}, "")
    _check_version(cfg)
    seed = _integer(cfg, "seed", "", minimum=0)
    obj = _section(cfg, "shares", "")
    _reject_unknown(obj, {"secret_seed", "threshold", "count", "prime"},
                    "shares")
    secret_seed = _integer(obj, "secret_seed", "shares", minimum=0)
    threshold = _integer(obj, "threshold", "shares", minimum=1)
    count = _integer(obj, "count", "shares", minimum=1)
    prime = _integer(obj, "prime", "shares", required=False,
                     default=secret.DEFAULT_PRIME, minimum=3)
    if args.out is None:
        raise ConfigError("shares split needs --out to place the share files")
    try:
        share_set = secret.split_seed(secret_seed, threshold, count,
                                      np.random.default_rng(seed), prime=prime)
    except ValueError as exc:
        raise ConfigError(f"shares: {exc}") from exc
    os.makedirs(args.out, exist_ok=True)
    names = []
    for share in share_set.shares:
        name = f"share_{share.party_id}.json"
        with open(os.path.join(args.out, name), "w", encoding="utf-8",
                  newline="") as handle:
            handle.write(secret.share_to_json(share, threshold, prime) + "\n")
        names.append(name)
    summary = {
        "version": CONFIG_VERSION,
        "threshold": threshold,
        "share_count": count,
        "prime": prime,
        "files": names,
    }
    sys.stdout.write(_dump_json(summary))
    return EXIT_OK


def _cmd_shares_reconstruct(args) -> int:
    cfg = _load_config(args.config)
    _reject_unknown(cfg, {"version", "timing"}, "")
    _check_version(cfg)
    horizon, on_count, cycle = _parse_timing(cfg)
    parsed = []
    for path in args.files:
        try:
            with open(path, "r", encoding="utf-8") as handle:
                parsed.append(secret.share_from_json(handle.read()))
        except OSError as exc:
            raise ConfigError(f"cannot read share file {path!r}: {exc}") from exc
    thresholds = {k for _, k, _ in parsed}
    primes = {p for _, _, p in parsed}
    if len(thresholds) != 1 or len(primes) != 1:
        raise QuorumError("share files disagree on threshold or prime")
    threshold = thresholds.pop()
    prime = primes.pop()
    seed = secret.reconstruct_seed([s for s, _, _ in parsed], threshold, prime)
    schedule = secret.expand_schedule(seed, horizon, on_count, cycle)
    head = [float(t) for t in schedule.on_times[:5]]
    report = {
        "version": CONFIG_VERSION,
        "seed": seed,
        "on_count": on_count,
        "on_times_head": head,
    }
    sys.stdout.write(_dump_json(report))
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="swapguard",
        description="Timing analysis and simulation of the swap-to-ancilla "
                    "network defense.")
    sub = parser.add_subparsers(dest="command", required=True)

    analyze = sub.add_parser("analyze", help="closed-form timing table (CSV)")
    analyze.add_argument("--config", required=True)
    analyze.add_argument("--out", default=None,
                         help="directory for analysis.csv (default: stdout)")
    analyze.set_defaults(func=_cmd_analyze)

    sim_t = sub.add_parser("simulate-timing",
                           help="Monte Carlo estimate vs closed form (JSON)")
    sim_t.add_argument("--config", required=True)
    sim_t.add_argument("--seed", type=int, default=None)
    sim_t.add_argument("--trials", type=int, default=None)
    sim_t.add_argument("--out", default=None)
    sim_t.set_defaults(func=_cmd_simulate_timing)

    sim_q = sub.add_parser("simulate-quantum",
                           help="end-to-end protocol sweep (JSON)")
    sim_q.add_argument("--config", required=True)
    sim_q.add_argument("--seed", type=int, default=None)
    sim_q.add_argument("--trials", type=int, default=None)
    sim_q.add_argument("--out", default=None)
    sim_q.set_defaults(func=_cmd_simulate_quantum)

    verify = sub.add_parser("verify-algebra",
                            help="operator-identity residual battery (JSON)")
    verify.add_argument("--config", default=None)
    verify.add_argument("--out", default=None)
    verify.set_defaults(func=_cmd_verify_algebra)

    shares = sub.add_parser("shares", help="threshold-share the schedule seed")
    shares_sub = shares.add_subparsers(dest="action", required=True)
    split = shares_sub.add_parser("split", help="write per-party share files")
    split.add_argument("--config", required=True)
    split.add_argument("--out", default=None,
                       help="directory for the share files")
    split.set_defaults(func=_cmd_shares_split)
    reconstruct = shares_sub.add_parser(
        "reconstruct", help="recover the seed from a quorum of share files")
    reconstruct.add_argument("--config", required=True)
    reconstruct.add_argument("files", nargs="+")
    reconstruct.set_defaults(func=_cmd_shares_reconstruct)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except (ConfigError, QuorumError, DimensionCapError, FeasibilityError,
            ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except RejectionCapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
