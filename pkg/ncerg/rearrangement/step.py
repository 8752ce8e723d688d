"""
Step Function

一般化特異値関数 μ_t(x) を右連続・非増加の階段関数として扱うモジュール
"""

import logging

import numpy as np
from numpy.typing import ArrayLike, NDArray
from pydantic import BaseModel, ConfigDict, field_validator

from ncerg.algebra import Operator, singular_values

logger = logging.getLogger(__name__)

# pooled singular values closer than this (relative to the largest) are merged
MERGE_RTOL = 1e-12
# values below this fraction of the largest are numerical zeros
ZERO_RTOL = 1e-14


class StepFunction(BaseModel):
    """
    t ↦ μ_t(x) の階段表現 [(value, mass), ...]

    values は非増加、masses は正。総質量を超える t では 0
    """

    model_config = ConfigDict(frozen=True)

    steps: tuple[tuple[float, float], ...] = ()

    @field_validator("steps")
    @classmethod
    def _check_steps(cls, steps: tuple[tuple[float, float], ...]) -> tuple[tuple[float, float], ...]:
        previous = float("inf")
        for value, mass in steps:
            if not (np.isfinite(value) and np.isfinite(mass)):
                raise ValueError("step values and masses must be finite")
            if value < 0:
                raise ValueError(f"step value {value} is negative")
            if mass <= 0:
                raise ValueError(f"step mass {mass} is not positive")
            if value > previous:
                raise ValueError("step values must be non-increasing")
            previous = value
        return steps

    @classmethod
    def from_pooled(cls, values: ArrayLike, masses: ArrayLike) -> "StepFunction":
        """
        重み付き値の集まりから階段関数を作成

        Args:
            values: 非負の値
            masses: 各値の質量

        Returns:
            StepFunction: 降順に並べ、等しい値を併合した階段関数
        """
        values = np.asarray(values, dtype=float).ravel()
        masses = np.asarray(masses, dtype=float).ravel()
        if values.size == 0:
            return cls()
        order = np.argsort(-values, kind="stable")
        values, masses = values[order], masses[order]
        top = float(values[0])
        if top <= 0:
            return cls()
        merged: list[list[float]] = []
        for v, m in zip(values, masses, strict=True):
            if v <= ZERO_RTOL * top:
                break
            if merged and merged[-1][0] - v <= MERGE_RTOL * top:
                merged[-1][1] += float(m)
            else:
                merged.append([float(v), float(m)])
        return cls(steps=tuple((v, m) for v, m in merged))

    @property
    def values(self) -> NDArray[np.float64]:
        return np.array([v for v, _ in self.steps], dtype=float)

    @property
    def masses(self) -> NDArray[np.float64]:
        return np.array([m for _, m in self.steps], dtype=float)

    @property
    def breakpoints(self) -> NDArray[np.float64]:
        """Cumulative masses (right ends of the steps)"""
        return np.cumsum(self.masses)

    @property
    def total_mass(self) -> float:
        return float(np.sum(self.masses))

    @property
    def sup(self) -> float:
        """μ_0"""
        return self.steps[0][0] if self.steps else 0.0

    def value_at(self, t: float) -> float:
        """Right-continuous evaluation of μ_t"""
        if t < 0:
            return self.sup
        if not self.steps:
            return 0.0
        idx = int(np.searchsorted(self.breakpoints, t, side="right"))
        return self.steps[idx][0] if idx < len(self.steps) else 0.0

    def integral(self, s: float = float("inf")) -> float:
        """∫_0^s μ_t dt"""
        total, start = 0.0, 0.0
        for value, mass in self.steps:
            if start >= s:
                break
            total += value * (min(mass, s - start))
            start += mass
        return total

    def excess(self, level: float) -> float:
        """∫ (μ_t - level)_+ dt"""
        return float(sum(m * max(v - level, 0.0) for v, m in self.steps))

    def to_json(self) -> list[list[float]]:
        return [[v, m] for v, m in self.steps]


def mu(x: Operator) -> StepFunction:
    """
    非可換非増加再配列 μ(x)

    全ブロックの特異値をまとめ、ブロックの重みを質量として降順に並べる

    Args:
        x: 作用素

    Returns:
        StepFunction: μ(x)
    """
    values = np.concatenate(singular_values(x))
    masses = np.concatenate(
        [np.full(d, w) for d, w in zip(x.shape.dims, x.shape.weights, strict=True)]
    )
    return StepFunction.from_pooled(values, masses)
