"""Single-qubit coin gates built from a phase / Z-Y-Z rotation decomposition.

A coin gate is ``Rz(beta) @ Ry(theta) @ Rz(alpha) @ Ph(delta)``: the global
phase acts first on the state and ``Rz(beta)`` last. All angles are radians.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

Matrix2 = np.ndarray

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
IDENTITY = np.eye(2, dtype=complex)


def _check_finite(*values: float) -> None:
    for v in values:
        if not math.isfinite(v):
            raise ValueError(f"gate angle must be finite, got {v!r}")


@dataclass(frozen=True)
class GateParams:
    """Four angles of one coin gate."""

    delta: float = 0.0
    alpha: float = 0.0
    beta: float = 0.0
    theta: float = 0.0

    def __post_init__(self) -> None:
        _check_finite(self.delta, self.alpha, self.beta, self.theta)

    def with_delta(self, delta: float) -> "GateParams":
        return GateParams(delta, self.alpha, self.beta, self.theta)

    def as_dict(self) -> dict[str, float]:
        return {"delta": self.delta, "alpha": self.alpha, "beta": self.beta, "theta": self.theta}


# Experiment coefficients for gates A, B1, B2 (alpha = 1 rad for all three).
REFERENCE_A = GateParams(delta=0.0, alpha=1.0, beta=0.0, theta=2 * (math.pi / 2 + 0.01))
REFERENCE_B1 = GateParams(delta=0.0, alpha=1.0, beta=0.0, theta=2 * (math.pi / 10 + 0.01))
REFERENCE_B2 = GateParams(delta=0.0, alpha=1.0, beta=0.0, theta=2 * (3 * math.pi / 4 + 0.01))


def phase_gate(xi: float) -> Matrix2:
    _check_finite(xi)
    z = complex(math.cos(xi), math.sin(xi))
    return np.array([[z, 0], [0, z]], dtype=complex)


def rotation_y(xi: float) -> Matrix2:
    _check_finite(xi)
    c, s = math.cos(xi / 2), math.sin(xi / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def rotation_z(xi: float) -> Matrix2:
    _check_finite(xi)
    h = xi / 2
    return np.array(
        [[complex(math.cos(h), -math.sin(h)), 0], [0, complex(math.cos(h), math.sin(h))]],
        dtype=complex,
    )


def compose_gate(p: GateParams) -> Matrix2:
    """Return the 2x2 unitary ``Rz(beta) Ry(theta) Rz(alpha) Ph(delta)``."""
    return rotation_z(p.beta) @ rotation_y(p.theta) @ rotation_z(p.alpha) @ phase_gate(p.delta)


def is_unitary(m: np.ndarray, atol: float = 1e-10) -> bool:
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    return bool(np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0]))) <= atol)
