"""Brute-force dense-matrix reference simulator.

Deliberately naive: every primitive op becomes an explicit ``2**m x 2**m``
matrix (Kronecker products for gates, per-basis-state loops for arithmetic)
and circuits are multiplied out. Shares no kernels with :mod:`qparrondo.engine`.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .engine import AddOp, GateOp, Op, RegisterLayout, ResidueOp, StateVector

MAX_QUBITS = 10


class OracleSizeError(ValueError):
    pass


@dataclass(eq=False)
class DenseUnitary:
    matrix: np.ndarray
    qubit_count: int

    def unitarity_error(self) -> float:
        u = self.matrix
        return float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))))


def _bits(index: int, m: int) -> list[int]:
    return [(index >> k) & 1 for k in range(m)]


def _from_bits(bits: list[int]) -> int:
    return sum(b << k for k, b in enumerate(bits))


def _kron_all(factors_by_qubit: list[np.ndarray]) -> np.ndarray:
    # qubit m-1 is the most significant bit, so it goes leftmost
    out = np.array([[1.0 + 0j]])
    for f in reversed(factors_by_qubit):
        out = np.kron(out, f)
    return out


def _gate_matrix(op: GateOp, m: int) -> np.ndarray:
    eye = np.eye(2, dtype=complex)
    proj = {True: np.diag([0, 1]).astype(complex), False: np.diag([1, 0]).astype(complex)}
    active = [eye] * m
    active[op.target] = np.asarray(op.matrix, dtype=complex)
    for q, positive in op.controls:
        active[q] = proj[bool(positive)]
    if not op.controls:
        return _kron_all(active)
    # U_ctrl = I + P_controls (x) (U - I)_target
    diff = [eye] * m
    diff[op.target] = np.asarray(op.matrix, dtype=complex) - eye
    for q, positive in op.controls:
        diff[q] = proj[bool(positive)]
    return np.eye(1 << m, dtype=complex) + _kron_all(diff)


def _permutation_matrix(m: int, mapping) -> np.ndarray:
    dim = 1 << m
    mat = np.zeros((dim, dim), dtype=complex)
    for j in range(dim):
        mat[mapping(j), j] = 1.0
    return mat


def _controls_ok(bits: list[int], controls) -> bool:
    return all(bits[q] == (1 if positive else 0) for q, positive in controls)


def _read(bits: list[int], reg: range) -> int:
    return _from_bits([bits[q] for q in reg])


def _write(bits: list[int], reg: range, value: int) -> list[int]:
    out = list(bits)
    for k, q in enumerate(reg):
        out[q] = (value >> k) & 1
    return out


def _add_matrix(op: AddOp, m: int) -> np.ndarray:
    size = 1 << len(op.reg)

    def mapping(j: int) -> int:
        bits = _bits(j, m)
        if not _controls_ok(bits, op.controls):
            return j
        return _from_bits(_write(bits, op.reg, (_read(bits, op.reg) + op.delta) % size))

    return _permutation_matrix(m, mapping)


def _residue_matrix(op: ResidueOp, m: int) -> np.ndarray:
    size = 1 << len(op.target)

    def mapping(j: int) -> int:
        bits = _bits(j, m)
        a = _read(bits, op.source)
        b = _read(bits, op.target)
        return _from_bits(_write(bits, op.target, (b + op.sign * (a % op.modulus)) % size))

    return _permutation_matrix(m, mapping)


def op_matrix(op: Op, m: int) -> np.ndarray:
    if isinstance(op, GateOp):
        return _gate_matrix(op, m)
    if isinstance(op, AddOp):
        return _add_matrix(op, m)
    if isinstance(op, ResidueOp):
        return _residue_matrix(op, m)
    raise TypeError(f"unknown op {op!r}")


def build_dense(
    circuit: Sequence[Op], layout: RegisterLayout | int, check_unitary: bool = True
) -> DenseUnitary:
    """Multiply out ``circuit`` (first op applied first) into one dense matrix."""
    m = layout if isinstance(layout, int) else layout.total_qubits
    if m > MAX_QUBITS:
        raise OracleSizeError(f"dense oracle is capped at {MAX_QUBITS} qubits, got {m}")
    total = np.eye(1 << m, dtype=complex)
    for op in circuit:
        total = op_matrix(op, m) @ total
    dense = DenseUnitary(total, m)
    if check_unitary:
        err = dense.unitarity_error()
        if err > 1e-10:
            raise ValueError(f"circuit matrix is not unitary (max |U^dag U - I| = {err:.3e})")
    return dense


def oracle_evolve(state: StateVector, dense: DenseUnitary) -> StateVector:
    if state.qubit_count != dense.qubit_count:
        raise ValueError(
            f"state has {state.qubit_count} qubits but the matrix acts on {dense.qubit_count}"
        )
    return StateVector(dense.matrix @ state.amplitudes)


def dense_capital_distribution(state: StateVector, layout: RegisterLayout) -> dict[int, float]:
    """Capital marginal computed by a plain loop over basis states."""
    out: dict[int, float] = {}
    for j, amp in enumerate(state.amplitudes):
        p = abs(amp) ** 2
        if p == 0.0:
            continue
        v = _read(_bits(j, layout.total_qubits), layout.capital)
        out[v] = out.get(v, 0.0) + p
    return out
