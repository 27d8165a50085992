"""Capital-dependent quantum Parrondo games on the statevector engine.

Game A tosses coin gate A and then moves the capital with the conditional
increment/decrement (CID). Game B first writes ``capital mod 3`` into the
ancilla pair ``o1 o2``, raises a flag on ``o3`` for multiples of three, tosses
one of B1/B2 conditioned on that flag, and uncomputes the flag and residue
before CID changes the capital. Uncomputing after CID would leave the ancilla
entangled with the capital.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Any, Iterable

import numpy as np

from . import __version__
from .engine import (
    AddOp,
    CompiledCircuit,
    GateOp,
    Op,
    RegisterLayout,
    ResidueOp,
    StateVector,
    apply_circuit,
    init_state,
    neg,
    pos,
    register_distribution,
)
from .series import GainSeries, Strategy
from .gates import PAULI_X, REFERENCE_A, REFERENCE_B1, REFERENCE_B2, GateParams, compose_gate

B_MAPPINGS = ("paper", "classical")
GAIN_FORMULAS = ("integer", "sigma_z")
LEAKAGE_TOL = 1e-12
BOUNDARY_TOL = 1e-12


class CapitalOverflowError(ValueError):
    """The capital register is too small for the requested number of games."""

    def __init__(self, message: str, minimum_qubits: int):
        super().__init__(message)
        self.minimum_qubits = minimum_qubits


class AncillaLeakageError(AssertionError):
    pass


@dataclass(frozen=True)
class QuantumGameConfig:
    """Gate parameters and conventions for one quantum run.

    ``capital_qubits=None`` sizes the capital register from the number of games
    when the run starts (see :func:`capacity_qubits`).
    """

    params_a: GateParams = REFERENCE_A
    params_b1: GateParams = REFERENCE_B1
    params_b2: GateParams = REFERENCE_B2
    capital_qubits: int | None = None
    offset: int = 0
    b_mapping: str = "paper"
    gain_formula: str = "integer"

    def __post_init__(self) -> None:
        if self.b_mapping not in B_MAPPINGS:
            raise ValueError(f"b_mapping must be one of {B_MAPPINGS}, got {self.b_mapping!r}")
        if self.gain_formula not in GAIN_FORMULAS:
            raise ValueError(f"gain_formula must be one of {GAIN_FORMULAS}, got {self.gain_formula!r}")
        n = self.capital_qubits
        if n is not None:
            if n < 2:
                raise ValueError(f"capital_qubits must be at least 2, got {n}")
            if not 0 <= (1 << (n - 1)) + self.offset < (1 << n):
                raise ValueError(f"offset {self.offset} does not fit a {n}-qubit capital register")

    def replace(self, **changes: Any) -> "QuantumGameConfig":
        fields = {k: getattr(self, k) for k in self.__dataclass_fields__}
        fields.update(changes)
        return QuantumGameConfig(**fields)

    def as_dict(self) -> dict[str, Any]:
        return {
            "params_a": self.params_a.as_dict(),
            "params_b1": self.params_b1.as_dict(),
            "params_b2": self.params_b2.as_dict(),
            "capital_qubits": self.capital_qubits,
            "offset": self.offset,
            "b_mapping": self.b_mapping,
            "gain_formula": self.gain_formula,
        }


def capacity_qubits(games: int, offset: int = 0) -> int:
    """Smallest n with ``games + |offset| < 2**n``: enough register capacity for the walk.

    For 2000 games this is 11, i.e. 15 qubits with coin and ancilla.
    """
    return max(2, math.ceil(math.log2(games + abs(offset) + 1)))


def safe_qubits(games: int, offset: int = 0) -> int:
    """Smallest n with ``games + |offset| < 2**(n-1)``: no support can reach the register edge."""
    return max(2, capacity_qubits(games, offset) + 1)


def widened_qubits(n: int, games: int, offset: int = 0) -> int:
    """Smallest wrap-free size reachable from ``n`` in steps of two qubits.

    The start capital ``2**(n-1) + offset`` keeps its residue mod 3 (and the
    parity readout keeps its sign) only when n changes by an even amount, so
    this is the size that reproduces an n-qubit run without wrap-around.
    """
    safe = safe_qubits(games, offset)
    return n if n >= safe else safe + (safe - n) % 2


def cid_ops(layout: RegisterLayout) -> list[Op]:
    coin = layout.coin_qubit
    return [
        AddOp(layout.capital, +1, (pos(coin),), "cid+"),
        AddOp(layout.capital, -1, (neg(coin),), "cid-"),
    ]


def _residue_reg(layout: RegisterLayout) -> range:
    o1 = layout.ancilla[0]
    return range(o1, o1 + 2)


def mod3_ops(layout: RegisterLayout, inverse: bool = False) -> list[Op]:
    sign = -1 if inverse else 1
    return [ResidueOp(layout.capital, _residue_reg(layout), 3, sign, "mod3_inv" if inverse else "mod3")]


def flag_ops(layout: RegisterLayout) -> list[Op]:
    o1, o2, o3 = layout.ancilla
    return [GateOp(PAULI_X, o3, (neg(o1), neg(o2)), "flag")]


def game_a_ops(layout: RegisterLayout, config: QuantumGameConfig) -> list[Op]:
    return [GateOp(compose_gate(config.params_a), layout.coin_qubit, (), "A")] + cid_ops(layout)


def game_b_ops(layout: RegisterLayout, config: QuantumGameConfig) -> list[Op]:
    b1 = compose_gate(config.params_b1)
    b2 = compose_gate(config.params_b2)
    on_multiple, otherwise = (b2, b1) if config.b_mapping == "paper" else (b1, b2)
    coin, o3 = layout.coin_qubit, layout.ancilla[2]
    return (
        mod3_ops(layout)
        + flag_ops(layout)
        + [
            GateOp(on_multiple, coin, (pos(o3),), "B|mult3"),
            GateOp(otherwise, coin, (neg(o3),), "B|other"),
        ]
        + flag_ops(layout)
        + mod3_ops(layout, inverse=True)
        + cid_ops(layout)
    )


def cid(state: StateVector, layout: RegisterLayout) -> StateVector:
    return apply_circuit(state, cid_ops(layout))


def mod3_compute(state: StateVector, layout: RegisterLayout) -> StateVector:
    return apply_circuit(state, mod3_ops(layout))


def mod3_uncompute(state: StateVector, layout: RegisterLayout) -> StateVector:
    return apply_circuit(state, mod3_ops(layout, inverse=True))


def flag_multiple_of_three(state: StateVector, layout: RegisterLayout) -> StateVector:
    return apply_circuit(state, flag_ops(layout))


def ancilla_leakage(state: StateVector, layout: RegisterLayout) -> float:
    """Total probability on ancilla values other than ``000``."""
    blocks = state.amplitudes.reshape(8, 1 << (layout.capital_size + 1))
    return float(np.sum(np.abs(blocks[1:]) ** 2))


def _check_leakage(state: StateVector, layout: RegisterLayout, where: str) -> None:
    leak = ancilla_leakage(state, layout)
    if leak >= LEAKAGE_TOL:
        raise AncillaLeakageError(f"ancilla leakage {leak:.3e} {where}")


def game_a(
    state: StateVector, layout: RegisterLayout, config: QuantumGameConfig, check: bool = False
) -> StateVector:
    if check:
        _check_leakage(state, layout, "before game A")
    apply_circuit(state, game_a_ops(layout, config))
    if check:
        _check_leakage(state, layout, "after game A")
    return state


def game_b(
    state: StateVector, layout: RegisterLayout, config: QuantumGameConfig, check: bool = False
) -> StateVector:
    if check:
        _check_leakage(state, layout, "before game B")
    apply_circuit(state, game_b_ops(layout, config))
    if check:
        _check_leakage(state, layout, "after game B")
    return state


def capital_distribution(state: StateVector, layout: RegisterLayout) -> np.ndarray:
    return register_distribution(state, layout.capital)


@lru_cache(maxsize=32)
def _parity_signs(n: int) -> np.ndarray:
    v = np.arange(1 << n, dtype=np.int64)
    pop = np.zeros_like(v)
    for k in range(n):
        pop += (v >> k) & 1
    signs = np.where(pop % 2 == 0, 1.0, -1.0)
    signs.setflags(write=False)
    return signs


def gain_from_distribution(dist: np.ndarray, formula: str, initial_capital: int) -> float:
    if formula == "integer":
        return float(np.dot(dist, np.arange(dist.shape[0]) - initial_capital))
    if formula == "sigma_z":
        return float(np.dot(dist, _parity_signs(dist.shape[0].bit_length() - 1)))
    raise ValueError(f"unknown gain formula {formula!r}")


def expected_capital_gain(state: StateVector, layout: RegisterLayout, initial_capital: int) -> float:
    return gain_from_distribution(capital_distribution(state, layout), "integer", initial_capital)


def sigma_z_expectation(state: StateVector, layout: RegisterLayout) -> float:
    """Expectation of the n-fold tensor product of sigma_z on the capital register."""
    return gain_from_distribution(capital_distribution(state, layout), "sigma_z", 0)


def resolve_layout(config: QuantumGameConfig, games: int) -> RegisterLayout:
    n = config.capital_qubits
    need = capacity_qubits(games, config.offset)
    if n is None:
        n = need
    elif n < need:
        raise CapitalOverflowError(
            f"{games} games with offset {config.offset} need at least {need} capital qubits, got {n}",
            need,
        )
    return RegisterLayout(n)


def run_strategy_all(
    config: QuantumGameConfig,
    strategy: Strategy | str,
    iterations: int,
    formulas: Iterable[str] = GAIN_FORMULAS,
    check_ancilla: bool = False,
    widen_on_edge: bool | None = None,
) -> dict[str, GainSeries]:
    """Play ``strategy`` cyclically for ``iterations`` repetitions and read out every formula.

    The gain is recorded after each elementary game. A register smaller than
    :func:`safe_qubits` has its two edge values monitored; if probability
    reaches them a :class:`CapitalOverflowError` is raised before any mass can
    wrap. With ``widen_on_edge`` (the default when ``capital_qubits`` is None,
    which starts from :func:`capacity_qubits`) the run is instead repeated at
    :func:`widened_qubits`.
    """
    if iterations < 1:
        raise ValueError(f"iterations must be at least 1, got {iterations}")
    if isinstance(strategy, str):
        strategy = Strategy.parse(strategy)
    if widen_on_edge is None:
        widen_on_edge = config.capital_qubits is None
    formulas = tuple(formulas)
    games = iterations * len(strategy)
    layout = resolve_layout(config, games)
    try:
        return _evolve(config, layout, strategy, iterations, formulas, check_ancilla)
    except CapitalOverflowError:
        if not widen_on_edge:
            raise
        layout = RegisterLayout(widened_qubits(layout.capital_size, games, config.offset))
        return _evolve(config, layout, strategy, iterations, formulas, check_ancilla)


def _evolve(
    config: QuantumGameConfig,
    layout: RegisterLayout,
    strategy: Strategy,
    iterations: int,
    formulas: tuple[str, ...],
    check_ancilla: bool,
) -> dict[str, GainSeries]:
    games = iterations * len(strategy)
    n = layout.capital_size
    monitor_edges = n < safe_qubits(games, config.offset)
    initial = layout.midpoint + config.offset

    m = layout.total_qubits
    circuits = {
        "A": CompiledCircuit(game_a_ops(layout, config), m),
        "B": CompiledCircuit(game_b_ops(layout, config), m),
    }
    state = init_state(layout, config.offset)
    gains = {f: np.empty(games) for f in formulas}
    worst_leak = 0.0
    worst_edge = 0.0
    if monitor_edges and not 0 < initial < (1 << n) - 1:
        need = widened_qubits(n, games, config.offset)
        raise CapitalOverflowError(
            f"initial capital {initial} sits on the edge of the {n}-qubit register; "
            f"use at least {need} capital qubits",
            need,
        )
    for step in range(games):
        token = strategy.tokens[step % len(strategy)]
        if check_ancilla:
            _check_leakage(state, layout, f"before game {token} at step {step + 1}")
        circuits[token](state)
        if check_ancilla:
            worst_leak = max(worst_leak, ancilla_leakage(state, layout))
            _check_leakage(state, layout, f"after game {token} at step {step + 1}")
        dist = capital_distribution(state, layout)
        if monitor_edges:
            edge = float(dist[0] + dist[-1])
            worst_edge = max(worst_edge, edge)
            if edge > BOUNDARY_TOL:
                need = widened_qubits(n, games, config.offset)
                raise CapitalOverflowError(
                    f"capital reached the edge of the {n}-qubit register at step {step + 1} "
                    f"(probability {edge:.3e}); use at least {need} capital qubits",
                    need,
                )
        for f in formulas:
            gains[f][step] = gain_from_distribution(dist, f, initial)

    steps = np.arange(1, games + 1)
    base_meta = {
        "engine_version": __version__,
        "strategy": strategy.tokens,
        "iterations": iterations,
        "games": games,
        "step_unit": "elementary game",
        "capital_qubits": n,
        "total_qubits": layout.total_qubits,
        "initial_capital": initial,
        "config": config.replace(capital_qubits=n).as_dict(),
        "norm_error": abs(state.norm() - 1.0),
        "edge_probability_max": worst_edge,
    }
    if check_ancilla:
        base_meta["ancilla_leakage_max"] = worst_leak
    out = {}
    for f in formulas:
        meta = dict(base_meta)
        meta["gain_formula"] = f
        meta["config"] = dict(base_meta["config"], gain_formula=f)
        out[f] = GainSeries(steps, gains[f], meta)
    return out


def run_strategy(
    config: QuantumGameConfig, strategy: Strategy | str, iterations: int, check_ancilla: bool = False
) -> GainSeries:
    return run_strategy_all(config, strategy, iterations, (config.gain_formula,), check_ancilla)[
        config.gain_formula
    ]
