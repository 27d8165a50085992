"""Classical capital-dependent Parrondo games: exact distribution evolution and Monte Carlo.

Game A wins with probability ``1/2 - eps``. Game B wins with ``1/10 - eps``
when the capital is a multiple of three (negative multiples included) and
with ``3/4 - eps`` otherwise. Each game moves the capital by +1 or -1.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .series import GainSeries, Strategy

MC_BLOCK = 100_000


@dataclass(frozen=True)
class ClassicalParams:
    epsilon: float = 0.005

    def __post_init__(self) -> None:
        for p in (self.p_a, self.p_b_mult3, self.p_b_other):
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"epsilon={self.epsilon} gives win probability {p} outside [0, 1]")

    @property
    def p_a(self) -> float:
        return 0.5 - self.epsilon

    @property
    def p_b_mult3(self) -> float:
        return 0.1 - self.epsilon

    @property
    def p_b_other(self) -> float:
        return 0.75 - self.epsilon


def win_probability(game: str, capital: np.ndarray, params: ClassicalParams) -> np.ndarray:
    capital = np.asarray(capital)
    if game == "A":
        return np.full(capital.shape, params.p_a)
    if game == "B":
        # numpy % is the mathematical modulus, so -3 counts as a multiple of three
        return np.where(capital % 3 == 0, params.p_b_mult3, params.p_b_other)
    raise ValueError(f"unknown game {game!r}")


@dataclass(eq=False)
class CapitalDistribution:
    """Probabilities of the integer capitals ``lowest, lowest + 1, ...``."""

    lowest: int
    probs: np.ndarray

    @classmethod
    def point(cls, capital: int) -> "CapitalDistribution":
        return cls(capital, np.array([1.0]))

    @property
    def capitals(self) -> np.ndarray:
        return np.arange(self.lowest, self.lowest + len(self.probs))

    def mean(self) -> float:
        return float(np.dot(self.capitals, self.probs))

    def as_dict(self) -> dict[int, float]:
        return {int(c): float(p) for c, p in zip(self.capitals, self.probs) if p != 0.0}


def classical_step(dist: CapitalDistribution, game: str, params: ClassicalParams) -> CapitalDistribution:
    p = win_probability(game, dist.capitals, params)
    out = np.zeros(len(dist.probs) + 2)
    out[2:] += dist.probs * p
    out[:-2] += dist.probs * (1.0 - p)
    return CapitalDistribution(dist.lowest - 1, out)


def _metadata(strategy: Strategy, steps: int, params: ClassicalParams, initial_capital: int) -> dict:
    return {
        "strategy": strategy.tokens,
        "steps": steps,
        "step_unit": "elementary game",
        "epsilon": params.epsilon,
        "initial_capital": initial_capital,
    }


def expected_gain_exact(
    strategy: Strategy | str,
    steps: int,
    params: ClassicalParams = ClassicalParams(),
    initial_capital: int = 0,
) -> GainSeries:
    if steps < 1:
        raise ValueError(f"steps must be at least 1, got {steps}")
    if isinstance(strategy, str):
        strategy = Strategy.parse(strategy)
    dist = CapitalDistribution.point(initial_capital)
    gains = np.empty(steps)
    for k in range(steps):
        dist = classical_step(dist, strategy.tokens[k % len(strategy)], params)
        gains[k] = dist.mean() - initial_capital
    meta = _metadata(strategy, steps, params, initial_capital) | {"method": "exact"}
    return GainSeries(np.arange(1, steps + 1), gains, meta)


def monte_carlo(
    strategy: Strategy | str,
    steps: int,
    trials: int,
    seed: int,
    params: ClassicalParams = ClassicalParams(),
    initial_capital: int = 0,
) -> GainSeries:
    """Sample ``trials`` independent trajectories; returns the mean gain and its standard error per step.

    Trials are processed in blocks of ``MC_BLOCK``; block ``b`` draws from
    ``default_rng([seed, b])`` so results do not depend on how blocks are scheduled.
    """
    if trials < 1:
        raise ValueError(f"trials must be at least 1, got {trials}")
    if steps < 1:
        raise ValueError(f"steps must be at least 1, got {steps}")
    if isinstance(strategy, str):
        strategy = Strategy.parse(strategy)
    total = np.zeros(steps)
    total_sq = np.zeros(steps)
    for block, start in enumerate(range(0, trials, MC_BLOCK)):
        size = min(MC_BLOCK, trials - start)
        rng = np.random.default_rng([seed, block])
        capital = np.full(size, initial_capital, dtype=np.int64)
        for k in range(steps):
            p = win_probability(strategy.tokens[k % len(strategy)], capital, params)
            capital += np.where(rng.random(size) < p, 1, -1)
            gain = capital - initial_capital
            total[k] += gain.sum()
            total_sq[k] += np.dot(gain, gain)
    mean = total / trials
    if trials > 1:
        var = np.maximum(total_sq - trials * mean**2, 0.0) / (trials - 1)
        stderr = np.sqrt(var / trials)
    else:
        stderr = np.zeros(steps)
    meta = _metadata(strategy, steps, params, initial_capital) | {
        "method": "monte_carlo",
        "trials": trials,
        "seed": seed,
        "block_size": MC_BLOCK,
    }
    return GainSeries(np.arange(1, steps + 1), mean, meta, std_errors=stderr)
