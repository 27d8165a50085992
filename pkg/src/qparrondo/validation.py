"""Self-checks run by ``qparrondo validate``: exhaustive permutation checks,
engine-vs-dense-oracle agreement and game-level invariants."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import quantum
from .engine import (
    AddOp,
    Control,
    GateOp,
    Op,
    RegisterLayout,
    ResidueOp,
    StateVector,
    apply_circuit,
    init_state,
)
from .gates import GateParams, compose_gate
from .oracle import MAX_QUBITS, build_dense, oracle_evolve
from .quantum import QuantumGameConfig


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""


def classical_cid(index: int, n: int) -> int:
    coin = index & 1
    mask = (1 << n) - 1
    v = (index >> 1) & mask
    v = (v + (1 if coin else -1)) % (1 << n)
    return (index & ~(mask << 1)) | (v << 1)


def classical_mod3(index: int, n: int) -> int:
    v = (index >> 1) & ((1 << n) - 1)
    b = (index >> (n + 1)) & 0b11
    b = (b + v % 3) % 4
    return (index & ~(0b11 << (n + 1))) | (b << (n + 1))


def permutation_of(apply: Callable[[StateVector], StateVector], m: int) -> np.ndarray:
    """Destination index of every basis state, read off one labelled vector."""
    labels = np.arange(1, (1 << m) + 1, dtype=np.complex128)
    out = apply(StateVector(labels.copy())).amplitudes
    dest = np.empty(1 << m, dtype=np.int64)
    dest[(out.real - 1).astype(np.int64)] = np.arange(1 << m)
    if not np.array_equal(np.sort(out.real), labels.real):
        raise AssertionError("operation is not a basis permutation")
    return dest


def random_gate_params(rng: np.random.Generator) -> GateParams:
    return GateParams(*rng.uniform(-2 * math.pi, 2 * math.pi, size=4))


def random_op(m: int, rng: np.random.Generator) -> Op:
    kind = rng.integers(3)
    if kind == 0 or m < 3:
        target = int(rng.integers(m))
        others = [q for q in range(m) if q != target]
        k = int(rng.integers(0, min(3, len(others)) + 1))
        qs = rng.choice(others, size=k, replace=False)
        controls = tuple(Control(int(q), bool(rng.integers(2))) for q in qs)
        return GateOp(compose_gate(random_gate_params(rng)), target, controls)
    if kind == 1:
        length = int(rng.integers(1, m))
        start = int(rng.integers(0, m - length + 1))
        reg = range(start, start + length)
        others = [q for q in range(m) if q not in reg]
        k = int(rng.integers(0, min(2, len(others)) + 1))
        qs = rng.choice(others, size=k, replace=False) if others else []
        controls = tuple(Control(int(q), bool(rng.integers(2))) for q in qs)
        return AddOp(reg, int(rng.choice([-1, 1])), controls)
    split = int(rng.integers(1, m - 1))
    source = range(0, split)
    tlen = int(rng.integers(1, m - split + 1))
    target = range(split, split + tlen)
    if rng.integers(2):
        source, target = range(m - len(source), m), range(m - len(source) - tlen, m - len(source))
    return ResidueOp(source, target, 3, int(rng.choice([-1, 1])))


def random_config(rng: np.random.Generator, n: int, b_mapping: str | None = None) -> QuantumGameConfig:
    return QuantumGameConfig(
        params_a=random_gate_params(rng),
        params_b1=random_gate_params(rng),
        params_b2=random_gate_params(rng),
        capital_qubits=n,
        offset=int(rng.integers(-(1 << (n - 2)), 1 << (n - 2))),
        b_mapping=b_mapping or str(rng.choice(quantum.B_MAPPINGS)),
    )


def _max_diff(a: StateVector, b: StateVector) -> float:
    return float(np.max(np.abs(a.amplitudes - b.amplitudes)))


def check_cid_permutation(max_qubits: int) -> CheckResult:
    for n in range(2, min(6, max_qubits - 4) + 1):
        layout = RegisterLayout(n)
        m = layout.total_qubits
        got = permutation_of(lambda s: quantum.cid(s, layout), m)
        want = np.array([classical_cid(i, n) for i in range(1 << m)])
        bad = np.flatnonzero(got != want)
        if bad.size:
            return CheckResult("CID permutation", False, f"n={n}: basis state {bad[0]} misrouted")
    return CheckResult("CID permutation", True)


def check_mod3_permutation(max_qubits: int) -> CheckResult:
    for n in range(2, min(8, max_qubits - 4) + 1):
        layout = RegisterLayout(n)
        m = layout.total_qubits
        got = permutation_of(lambda s: quantum.mod3_compute(s, layout), m)
        want = np.array([classical_mod3(i, n) for i in range(1 << m)])
        bad = np.flatnonzero(got != want)
        if bad.size:
            return CheckResult("mod3 permutation", False, f"n={n}: basis state {bad[0]} misrouted")
        labels = StateVector(np.arange(1, (1 << m) + 1, dtype=complex))
        trip = quantum.mod3_uncompute(quantum.mod3_compute(labels.copy(), layout), layout)
        if not np.array_equal(trip.amplitudes, labels.amplitudes):
            return CheckResult("mod3 permutation", False, f"n={n}: uncompute is not an exact inverse")
    return CheckResult("mod3 permutation", True)


def check_oracle_single_ops(max_qubits: int, seed: int = 1, count: int = 100) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(count):
        m = int(rng.integers(2, min(9, max_qubits) + 1))
        op = random_op(m, rng)
        state = StateVector.random(m, rng)
        fast = apply_circuit(state.copy(), [op])
        ref = oracle_evolve(state, build_dense([op], m))
        worst = max(worst, _max_diff(fast, ref))
    return CheckResult("oracle agreement (single ops)", worst < 1e-10, f"max diff {worst:.2e}")


def check_oracle_games(max_qubits: int, seed: int = 2, count: int = 20) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    top = min(9, max_qubits) - 4
    for _ in range(count):
        n = int(rng.integers(2, top + 1))
        layout = RegisterLayout(n)
        config = random_config(rng, n)
        ops: list[Op] = []
        for token in rng.choice(["A", "B"], size=3):
            ops += quantum.game_a_ops(layout, config) if token == "A" else quantum.game_b_ops(layout, config)
        state = StateVector.random(layout.total_qubits, rng)
        fast = apply_circuit(state.copy(), ops)
        ref = oracle_evolve(state, build_dense(ops, layout))
        worst = max(worst, _max_diff(fast, ref))
    return CheckResult("oracle agreement (3-game circuits)", worst < 1e-10, f"max diff {worst:.2e}")


def check_game_unitarity(max_qubits: int) -> CheckResult:
    n = min(4, max_qubits - 4)
    layout = RegisterLayout(n)
    config = QuantumGameConfig(capital_qubits=n)
    worst = 0.0
    for ops in (quantum.game_a_ops(layout, config), quantum.game_b_ops(layout, config)):
        worst = max(worst, build_dense(ops, layout, check_unitary=False).unitarity_error())
    return CheckResult("game unitarity", worst < 1e-10, f"max |U^dag U - I| {worst:.2e}")


def check_run_invariants(seed: int = 3, games: int = 300) -> CheckResult:
    """Ancilla restoration, norm preservation and support/parity over a random strategy."""
    rng = np.random.default_rng(seed)
    n = quantum.safe_qubits(games)
    layout = RegisterLayout(n)
    for b_mapping in quantum.B_MAPPINGS:
        config = random_config(rng, n, b_mapping).replace(offset=0)
        state = init_state(layout, 0)
        c0 = layout.midpoint
        values = np.arange(1 << n)
        for k in range(1, games + 1):
            if rng.integers(2):
                quantum.game_a(state, layout, config)
            else:
                quantum.game_b(state, layout, config)
            leak = quantum.ancilla_leakage(state, layout)
            if leak >= 1e-12:
                return CheckResult("run invariants", False, f"ancilla leakage {leak:.2e} at game {k}")
            dist = quantum.capital_distribution(state, layout)
            allowed = (np.abs(values - c0) <= k) & ((values - c0 - k) % 2 == 0)
            if np.any(dist[~allowed] > 0):
                return CheckResult("run invariants", False, f"support/parity violated at game {k}")
        err = abs(state.norm() - 1)
        if err > 1e-9:
            return CheckResult("run invariants", False, f"norm drift {err:.2e}")
    return CheckResult("run invariants", True)


def check_phase_invariance(seed: int = 4) -> CheckResult:
    """A phase on gate A, or a common phase on B1 and B2, never changes the gains."""
    rng = np.random.default_rng(seed)
    n = 6
    config = random_config(rng, n).replace(offset=0)
    base = quantum.run_strategy_all(config, "ABBAB", 6)
    shift = float(rng.uniform(-3, 3))
    variants = [
        config.replace(params_a=config.params_a.with_delta(shift)),
        config.replace(
            params_b1=config.params_b1.with_delta(config.params_b1.delta + shift),
            params_b2=config.params_b2.with_delta(config.params_b2.delta + shift),
        ),
    ]
    worst = 0.0
    for cfg in variants:
        other = quantum.run_strategy_all(cfg, "ABBAB", 6)
        for f in base:
            worst = max(worst, float(np.max(np.abs(base[f].gains - other[f].gains))))
    return CheckResult("global phase invariance", worst < 1e-12, f"max diff {worst:.2e}")


def run_checks(max_qubits: int = 9) -> list[CheckResult]:
    if not 6 <= max_qubits <= MAX_QUBITS:
        raise ValueError(f"max_qubits must be in [6, {MAX_QUBITS}], got {max_qubits}")
    checks = [
        lambda: check_cid_permutation(max_qubits),
        lambda: check_mod3_permutation(max_qubits),
        lambda: check_oracle_single_ops(max_qubits),
        lambda: check_oracle_games(max_qubits),
        lambda: check_game_unitarity(max_qubits),
        check_run_invariants,
        check_phase_invariance,
    ]
    results = []
    for check in checks:
        try:
            results.append(check())
        except Exception as exc:  # a crashing check is a failing check
            name = getattr(check, "__name__", "check")
            results.append(CheckResult(name, False, f"{type(exc).__name__}: {exc}"))
    return results
