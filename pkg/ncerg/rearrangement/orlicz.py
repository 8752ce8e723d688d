"""
Orlicz Functions

Orlicz 関数 Ψ・Luxemburg ノルム・δ2/Δ2 条件の格子検定
"""

import logging
from collections.abc import Callable
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from numpy.typing import ArrayLike, NDArray
from pydantic import BaseModel

from ncerg.errors import OrliczError

from .step import StepFunction

logger = logging.getLogger(__name__)

CERTIFICATE_GRID = np.logspace(-6, 2, 1024)
CONVEXITY_TOL = 1e-9
BISECTION_RTOL = 1e-10
DELTA2_LIMIT = 1e6
DELTA2_STABILITY_RTOL = 1e-3
_BRACKET_STEPS = 2000


@dataclass(frozen=True)
class OrliczFunction:
    """
    凸・非減少・Ψ(0) = 0 の関数

    生成時に 1024 点の対数格子で単調性と中点凸性を検証する
    """

    tag: str
    parameter: float | None
    evaluator: Callable[[NDArray[np.float64]], NDArray[np.float64]] = field(
        repr=False, compare=False
    )

    def __post_init__(self) -> None:
        self._certify()

    @classmethod
    def power(cls, p: float) -> "OrliczFunction":
        if p < 1:
            raise OrliczError(f"t^p is convex only for p >= 1, got p={p}")
        return cls("power", float(p), lambda t: np.power(t, p))

    @classmethod
    def exp_minus_one(cls) -> "OrliczFunction":
        return cls("exp", None, np.expm1)

    @classmethod
    def parse(cls, spec: str) -> "OrliczFunction":
        """
        'power:2' / 'exp' 形式の記述子から作成

        Args:
            spec: 記述子

        Returns:
            OrliczFunction: Orlicz 関数
        """
        spec = spec.strip()
        if spec == "exp":
            return cls.exp_minus_one()
        if spec.startswith("power:"):
            try:
                return cls.power(float(spec.split(":", 1)[1]))
            except ValueError as e:
                raise OrliczError(f"Bad power exponent in '{spec}'") from e
        raise OrliczError(f"Unknown Orlicz descriptor '{spec}'")

    @property
    def spec(self) -> str:
        if self.tag == "power":
            return f"power:{self.parameter:g}"
        return self.tag

    def __call__(self, t: ArrayLike) -> NDArray[np.float64]:
        with np.errstate(over="ignore", invalid="ignore"):
            return np.asarray(self.evaluator(np.asarray(t, dtype=float)), dtype=float)

    def _certify(self) -> None:
        if float(self(np.array([0.0]))[0]) != 0.0:
            raise OrliczError(f"Ψ(0) must be 0 for {self.spec}")
        grid = CERTIFICATE_GRID
        values = self(grid)
        if not np.all(np.isfinite(values)):
            raise OrliczError(f"Ψ is not finite on the certificate grid for {self.spec}")
        scale = np.maximum(1.0, np.abs(values))
        if np.any(np.diff(values) < -CONVEXITY_TOL * scale[1:]):
            raise OrliczError(f"Ψ is not non-decreasing for {self.spec}")
        midpoints = self((grid[:-1] + grid[1:]) / 2)
        chords = (values[:-1] + values[1:]) / 2
        if np.any(midpoints > chords + CONVEXITY_TOL * scale[1:]):
            raise OrliczError(f"Ψ fails midpoint convexity for {self.spec}")


def _modular(psi: OrliczFunction, step: StepFunction, lam: float) -> float:
    total = float(np.sum(step.masses * psi(step.values / lam)))
    if np.isnan(total):
        raise OrliczError(f"Ψ evaluation is not a number at scale {lam:.3e}")
    return total


def luxemburg_norm(psi: OrliczFunction, step: StepFunction) -> float:
    """
    inf{λ > 0 : Σ mass·Ψ(value/λ) ≤ 1} を二分法で計算

    Args:
        psi: Orlicz 関数
        step: μ(x)

    Returns:
        float: Luxemburg ノルム (相対幅 1e-10 の上側端点)
    """
    if not step.steps:
        return 0.0
    hi = step.sup
    for _ in range(_BRACKET_STEPS):
        if _modular(psi, step, hi) <= 1.0:
            break
        hi *= 2.0
    else:
        raise OrliczError(f"Could not bracket the Luxemburg norm for {psi.spec}")
    lo = hi / 2.0
    for _ in range(_BRACKET_STEPS):
        if _modular(psi, step, lo) > 1.0:
            break
        hi, lo = lo, lo / 2.0
    else:
        raise OrliczError(f"Ψ vanishes on the needed range for {psi.spec}")

    while hi - lo > BISECTION_RTOL * hi:
        mid = (lo + hi) / 2.0
        if _modular(psi, step, mid) <= 1.0:
            hi = mid
        else:
            lo = mid
    if not np.isfinite(_modular(psi, step, hi)):
        raise OrliczError(f"Non-finite modular at the Luxemburg norm for {psi.spec}")
    logger.debug(f"Luxemburg norm for {psi.spec}: {hi:.12g}")
    return hi


class GrowthRegime(str, Enum):
    NEAR_ZERO = "near_zero"
    NEAR_INFINITY = "near_infinity"


class Delta2Report(BaseModel):
    """Result of a sampled Ψ(2t)/Ψ(t) growth test"""

    regime: GrowthRegime
    passes: bool
    worst_ratio: float
    diverged: bool


def _sup_ratio(psi: OrliczFunction, grid: NDArray[np.float64]) -> tuple[float, bool]:
    base = psi(grid)
    doubled = psi(2.0 * grid)
    worst, diverged = 0.0, False
    for a, b in zip(base, doubled, strict=True):
        if a == 0.0:
            if b != 0.0:
                diverged = True
            continue
        ratio = b / a
        if not np.isfinite(ratio):
            diverged = True
            continue
        worst = max(worst, float(ratio))
    return worst, diverged


def delta2_check(psi: OrliczFunction, regime: GrowthRegime | str) -> Delta2Report:
    """
    δ2 (near_zero, (1e-8, 1]) / Δ2 (near_infinity, [1, 1e8)) の格子検定

    最も細かい二つの格子で sup Ψ(2t)/Ψ(t) が有限 (< 1e6) かつ安定なら合格

    Args:
        psi: Orlicz 関数
        regime: 検定する領域

    Returns:
        Delta2Report: 判定と最悪比
    """
    regime = GrowthRegime(regime)
    lo, hi = (-8.0, 0.0) if regime is GrowthRegime.NEAR_ZERO else (0.0, 8.0)
    sups, diverged = [], False
    for points in (256, 512, 1024):
        sup, div = _sup_ratio(psi, np.logspace(lo, hi, points))
        sups.append(sup)
        diverged = diverged or div
    coarse, fine = sups[-2], sups[-1]
    stable = abs(fine - coarse) <= DELTA2_STABILITY_RTOL * max(fine, 1.0)
    passes = not diverged and fine < DELTA2_LIMIT and stable
    return Delta2Report(regime=regime, passes=passes, worst_ratio=fine, diverged=diverged)
