"""Strategy tokens and per-step gain trajectories shared by both game families."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np


@dataclass(frozen=True)
class Strategy:
    tokens: str

    def __post_init__(self) -> None:
        if not self.tokens or set(self.tokens) - {"A", "B"}:
            raise ValueError(f"strategy must be a nonempty sequence over A/B, got {self.tokens!r}")

    @classmethod
    def parse(cls, text: str) -> "Strategy":
        return cls(text.strip().upper())

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self):
        return iter(self.tokens)

    def __str__(self) -> str:
        return self.tokens


@dataclass
class GainSeries:
    """Expected gain after each elementary game; step 0 (gain 0) is implicit."""

    steps: np.ndarray
    gains: np.ndarray
    metadata: dict[str, Any] = field(default_factory=dict)
    std_errors: np.ndarray | None = None

    def __post_init__(self) -> None:
        self.steps = np.asarray(self.steps, dtype=np.int64)
        self.gains = np.asarray(self.gains, dtype=float)
        if self.steps.shape != self.gains.shape:
            raise ValueError("steps and gains must have equal length")
        if len(self.steps) and (self.steps[0] != 1 or np.any(np.diff(self.steps) != 1)):
            raise ValueError("steps must count 1, 2, 3, ...")

    def __len__(self) -> int:
        return len(self.steps)

    @property
    def final_gain(self) -> float:
        return float(self.gains[-1])
