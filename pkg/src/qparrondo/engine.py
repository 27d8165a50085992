"""Statevector engine for the coin + capital + ancilla register.

Basis indices are little-endian: qubit ``k`` contributes ``2**k``. The layout
is fixed: coin on qubit 0, capital on qubits ``1..n`` (LSB at qubit 1) and the
ancilla triple ``o1, o2, o3`` on qubits ``n+1..n+3``.

Operations mutate the state in place and return it. Index tables for
permutations and controlled pairs are cached per qubit count, so repeated
games on one register size cost a gather/scatter over the amplitude array.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple, Sequence

import numpy as np

from .gates import Matrix2

PROB_FLOOR = 1e-15


class Control(NamedTuple):
    qubit: int
    positive: bool = True


ControlSpec = Sequence[Control]


def pos(qubit: int) -> Control:
    return Control(qubit, True)


def neg(qubit: int) -> Control:
    return Control(qubit, False)


@dataclass(frozen=True)
class RegisterLayout:
    """Qubit assignment for a capital register of ``capital_size`` qubits."""

    capital_size: int

    def __post_init__(self) -> None:
        if self.capital_size < 2:
            raise ValueError(f"capital register needs at least 2 qubits, got {self.capital_size}")

    @property
    def coin_qubit(self) -> int:
        return 0

    @property
    def capital(self) -> range:
        return range(1, self.capital_size + 1)

    @property
    def ancilla(self) -> tuple[int, int, int]:
        n = self.capital_size
        return (n + 1, n + 2, n + 3)

    @property
    def total_qubits(self) -> int:
        return self.capital_size + 4

    @property
    def midpoint(self) -> int:
        return 1 << (self.capital_size - 1)

    def basis_index(self, coin: int, capital: int, ancilla: int = 0) -> int:
        """Basis index of ``|coin, capital, o1 o2 o3>`` with ``o1`` the ancilla LSB."""
        n = self.capital_size
        if not 0 <= capital < (1 << n):
            raise ValueError(f"capital value {capital} does not fit in {n} qubits")
        return (coin & 1) | (capital << 1) | ((ancilla & 0b111) << (n + 1))


@dataclass(eq=False)
class StateVector:
    amplitudes: np.ndarray
    qubit_count: int = field(init=False)

    def __post_init__(self) -> None:
        self.amplitudes = np.ascontiguousarray(self.amplitudes, dtype=np.complex128)
        size = self.amplitudes.shape[0]
        m = size.bit_length() - 1
        if self.amplitudes.ndim != 1 or size != 1 << m:
            raise ValueError("amplitude array length must be a power of two")
        self.qubit_count = m

    @classmethod
    def basis(cls, qubit_count: int, index: int) -> "StateVector":
        amps = np.zeros(1 << qubit_count, dtype=np.complex128)
        amps[index] = 1.0
        return cls(amps)

    @classmethod
    def random(cls, qubit_count: int, rng: np.random.Generator) -> "StateVector":
        amps = rng.normal(size=1 << qubit_count) + 1j * rng.normal(size=1 << qubit_count)
        return cls(amps / np.linalg.norm(amps))

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def copy(self) -> "StateVector":
        return StateVector(self.amplitudes.copy())


def init_state(layout: RegisterLayout, offset: int) -> StateVector:
    """Coin in ``(|0> + |1>)/sqrt(2)``, capital at ``2**(n-1) + offset``, ancilla ``|000>``."""
    n = layout.capital_size
    capital = layout.midpoint + offset
    if not 0 <= capital < (1 << n):
        lo, hi = -layout.midpoint, layout.midpoint - 1
        raise ValueError(f"offset {offset} out of range for n={n}; valid offsets are [{lo}, {hi}]")
    amps = np.zeros(1 << layout.total_qubits, dtype=np.complex128)
    amps[layout.basis_index(0, capital)] = 1 / np.sqrt(2)
    amps[layout.basis_index(1, capital)] = 1 / np.sqrt(2)
    return StateVector(amps)


def _check_qubits(m: int, qubits: Sequence[int]) -> None:
    for q in qubits:
        if not 0 <= q < m:
            raise IndexError(f"qubit index {q} out of range for {m}-qubit state")


def _normalize_controls(m: int, controls: ControlSpec, exclude: Sequence[int] = ()) -> tuple[Control, ...]:
    ctrl = tuple(Control(int(q), bool(p)) for q, p in controls)
    qubits = [c.qubit for c in ctrl]
    _check_qubits(m, qubits)
    if len(set(qubits)) != len(qubits):
        raise ValueError(f"duplicate control qubits in {qubits}")
    overlap = set(qubits) & set(exclude)
    if overlap:
        raise ValueError(f"control qubits {sorted(overlap)} overlap the target")
    return tuple(sorted(ctrl))


def _satisfied(idx: np.ndarray, controls: tuple[Control, ...]) -> np.ndarray:
    ok = np.ones(idx.shape, dtype=bool)
    for q, positive in controls:
        bit = (idx >> q) & 1
        ok &= bit == (1 if positive else 0)
    return ok


def _pair_views(amps: np.ndarray, m: int, target: int, controls: tuple[Control, ...]):
    # qubit q is tensor axis m-1-q; length-1 slices keep both halves strided views
    tensor = amps.reshape((2,) * m)
    index = [slice(None)] * m
    for q, positive in controls:
        index[m - 1 - q] = slice(1, 2) if positive else slice(0, 1)
    lo, hi = list(index), list(index)
    lo[m - 1 - target] = slice(0, 1)
    hi[m - 1 - target] = slice(1, 2)
    return tensor[tuple(lo)], tensor[tuple(hi)]


def _mix(a: np.ndarray, b: np.ndarray, u: np.ndarray) -> None:
    a0 = a.copy()
    a *= u[0, 0]
    a += u[0, 1] * b
    b *= u[1, 1]
    b += u[1, 0] * a0


def apply_single_qubit(state: StateVector, gate: Matrix2, target: int) -> StateVector:
    _check_qubits(state.qubit_count, [target])
    u = np.asarray(gate, dtype=np.complex128)
    _mix(*_pair_views(state.amplitudes, state.qubit_count, target, ()), u)
    return state


def apply_controlled(
    state: StateVector, gate: Matrix2, target: int, controls: ControlSpec
) -> StateVector:
    """Apply ``gate`` to ``target`` where every positive control is 1 and every negative control is 0."""
    m = state.qubit_count
    _check_qubits(m, [target])
    ctrl = _normalize_controls(m, controls, exclude=[target])
    u = np.asarray(gate, dtype=np.complex128)
    _mix(*_pair_views(state.amplitudes, m, target, ctrl), u)
    return state


def _field(idx: np.ndarray, reg: range) -> np.ndarray:
    return (idx >> reg.start) & ((1 << len(reg)) - 1)


def _with_field(idx: np.ndarray, reg: range, value: np.ndarray) -> np.ndarray:
    mask = ((1 << len(reg)) - 1) << reg.start
    return (idx & ~mask) | (value << reg.start)


def _check_register(m: int, reg: range) -> None:
    if reg.step != 1 or len(reg) == 0:
        raise ValueError(f"register must be a nonempty contiguous range, got {reg}")
    _check_qubits(m, [reg.start, reg.stop - 1])


def _gather_from_destinations(dest: np.ndarray) -> np.ndarray:
    src = np.empty_like(dest)
    src[dest] = np.arange(dest.shape[0], dtype=dest.dtype)
    src.setflags(write=False)
    return src


@lru_cache(maxsize=256)
def _add_table(m: int, reg: range, delta: int, controls: tuple[Control, ...]) -> np.ndarray:
    idx = np.arange(1 << m, dtype=np.int64)
    value = (_field(idx, reg) + delta) % (1 << len(reg))
    dest = np.where(_satisfied(idx, controls), _with_field(idx, reg, value), idx)
    return _gather_from_destinations(dest)


@lru_cache(maxsize=64)
def _residue_table(m: int, source: range, target: range, modulus: int, sign: int) -> np.ndarray:
    idx = np.arange(1 << m, dtype=np.int64)
    value = (_field(idx, target) + sign * (_field(idx, source) % modulus)) % (1 << len(target))
    return _gather_from_destinations(_with_field(idx, target, value))


def apply_permutation_table(state: StateVector, src: np.ndarray) -> StateVector:
    """Permute amplitudes so that ``new[i] = old[src[i]]``."""
    state.amplitudes[:] = state.amplitudes[src]
    return state


def add_to_register(
    state: StateVector, reg: range, delta: int, controls: ControlSpec = ()
) -> StateVector:
    """Map register value ``v`` to ``(v + delta) mod 2**len(reg)`` on the control-satisfied subspace."""
    if delta not in (1, -1):
        raise ValueError(f"delta must be +1 or -1, got {delta}")
    m = state.qubit_count
    _check_register(m, reg)
    ctrl = _normalize_controls(m, controls, exclude=list(reg))
    return apply_permutation_table(state, _add_table(m, reg, delta, ctrl))


def add_residue(
    state: StateVector, source: range, target: range, modulus: int, sign: int = 1
) -> StateVector:
    """Map ``|a>|b>`` to ``|a>|(b + sign * (a mod modulus)) mod 2**len(target)>``."""
    m = state.qubit_count
    _check_register(m, source)
    _check_register(m, target)
    if set(source) & set(target):
        raise ValueError("source and target registers overlap")
    if sign not in (1, -1) or modulus < 1:
        raise ValueError("sign must be +1 or -1 and modulus positive")
    return apply_permutation_table(state, _residue_table(m, source, target, modulus, sign))


def register_distribution(state: StateVector, reg: range) -> np.ndarray:
    """Probability of each register value, indexed by value (length ``2**len(reg)``)."""
    m = state.qubit_count
    _check_register(m, reg)
    amps = state.amplitudes
    probs = amps.real**2 + amps.imag**2
    dist = probs.reshape(1 << (m - reg.stop), 1 << len(reg), 1 << reg.start).sum(axis=(0, 2))
    dist[dist < PROB_FLOOR] = 0.0
    return dist


def measure_sample(state: StateVector, reg: range, seed: int, shots: int | None = None):
    """Sample register values from a terminal measurement; the state is left unchanged.

    Returns a single int when ``shots`` is None, otherwise an array of ``shots`` values.
    """
    dist = register_distribution(state, reg)
    dist = dist / dist.sum()
    rng = np.random.default_rng(seed)
    values = rng.choice(dist.shape[0], size=1 if shots is None else shots, p=dist)
    return int(values[0]) if shots is None else values


# Circuit description shared by the engine and the dense oracle.

@dataclass(frozen=True, eq=False)
class GateOp:
    matrix: np.ndarray
    target: int
    controls: tuple[Control, ...] = ()
    label: str = ""


@dataclass(frozen=True)
class AddOp:
    reg: range
    delta: int
    controls: tuple[Control, ...] = ()
    label: str = ""


@dataclass(frozen=True)
class ResidueOp:
    source: range
    target: range
    modulus: int = 3
    sign: int = 1
    label: str = ""


Op = GateOp | AddOp | ResidueOp


def apply_op(state: StateVector, op: Op) -> StateVector:
    if isinstance(op, GateOp):
        return apply_controlled(state, op.matrix, op.target, op.controls)
    if isinstance(op, AddOp):
        return add_to_register(state, op.reg, op.delta, op.controls)
    if isinstance(op, ResidueOp):
        return add_residue(state, op.source, op.target, op.modulus, op.sign)
    raise TypeError(f"unknown op {op!r}")


def apply_circuit(state: StateVector, ops: Sequence[Op]) -> StateVector:
    for op in ops:
        apply_op(state, op)
    return state


@lru_cache(maxsize=256)
def _flip_table(m: int, target: int, controls: tuple[Control, ...]) -> np.ndarray:
    idx = np.arange(1 << m, dtype=np.int64)
    src = np.where(_satisfied(idx, controls), idx ^ (1 << target), idx)
    src.setflags(write=False)
    return src


def _gather_table(op: Op, m: int) -> np.ndarray | None:
    """Gather table of a basis-permuting op, or None for a general gate."""
    if isinstance(op, AddOp):
        _check_register(m, op.reg)
        return _add_table(m, op.reg, op.delta, _normalize_controls(m, op.controls, list(op.reg)))
    if isinstance(op, ResidueOp):
        return _residue_table(m, op.source, op.target, op.modulus, op.sign)
    if isinstance(op, GateOp) and np.array_equal(op.matrix, [[0, 1], [1, 0]]):
        _check_qubits(m, [op.target])
        return _flip_table(m, op.target, _normalize_controls(m, op.controls, [op.target]))
    return None


class CompiledCircuit:
    """A circuit prepared for repeated application on ``m``-qubit states.

    Runs of consecutive permutation ops are fused into a single gather.
    """

    def __init__(self, ops: Sequence[Op], m: int):
        self.qubit_count = m
        self.steps: list[Op | np.ndarray] = []
        for op in ops:
            table = _gather_table(op, m)
            if table is None:
                self.steps.append(op)
            elif self.steps and isinstance(self.steps[-1], np.ndarray):
                # new[i] = mid[t2[i]] = old[t1[t2[i]]]
                self.steps[-1] = self.steps[-1][table]
            else:
                self.steps.append(table)

    def __call__(self, state: StateVector) -> StateVector:
        if state.qubit_count != self.qubit_count:
            raise ValueError("compiled for a different qubit count")
        for step in self.steps:
            if isinstance(step, np.ndarray):
                apply_permutation_table(state, step)
            else:
                apply_op(state, step)
        return state
