"""
Cesàro Averages

s_n(T)x = (1/n) Σ_{k<n} T^k x の漸化的計算・平均極限・Cauchy 列の診断
"""

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from pydantic import BaseModel

from ncerg.algebra import Operator
from ncerg.errors import ScheduleError, ShapeMismatchError, UncertifiedKernelError
from ncerg.kernels import KernelRep, certify_DS, fixed_space
from ncerg.rearrangement import NormId, norm_eval

logger = logging.getLogger(__name__)

DEFAULT_SCHEDULE: tuple[int, ...] = tuple(2**k for k in range(15))


def check_schedule(schedule: Sequence[int], minimum: int = 1) -> tuple[int, ...]:
    """Validate a strictly increasing schedule of positive integers"""
    values = tuple(int(n) for n in schedule)
    if len(values) < minimum:
        raise ScheduleError(f"Schedule needs at least {minimum} entries, got {len(values)}")
    if values and values[0] < 1:
        raise ScheduleError(f"Schedule entries must be >= 1, got {values[0]}")
    if any(b <= a for a, b in zip(values, values[1:], strict=False)):
        raise ScheduleError(f"Schedule must be strictly increasing: {list(values)}")
    return values


def require_certified(t: KernelRep) -> None:
    certification = certify_DS(t)
    if not certification.passed:
        raise UncertifiedKernelError(certification.failures)


@dataclass(frozen=True)
class Trajectory:
    """
    スケジュール上で記録した Cesàro 平均 (n, s_n)

    s_1 = x は厳密に一致する
    """

    kernel: KernelRep
    x: Operator
    schedule: tuple[int, ...]
    averages: tuple[Operator, ...] = field(repr=False)

    def average(self, n: int) -> Operator:
        try:
            return self.averages[self.schedule.index(n)]
        except ValueError as e:
            raise ScheduleError(f"n={n} is not on the recorded schedule") from e

    def items(self) -> list[tuple[int, Operator]]:
        return list(zip(self.schedule, self.averages, strict=True))

    def tail(self, start: int) -> list[tuple[int, Operator]]:
        """Recorded (n, s_n) with n >= start"""
        return [(n, s) for n, s in self.items() if n >= start]

    @property
    def last(self) -> Operator:
        return self.averages[-1]

    def recompute(self, n: int) -> Operator:
        """s_n from scratch: (1/n) Σ_{k<n} T^k x, summing fresh powers"""
        power = self.x
        total = Operator.zeros(self.x.shape)
        for _ in range(n):
            total = total + power
            power = self.kernel.apply(power)
        return total.scale(1.0 / n)


def cesaro(
    t: KernelRep, x: Operator, schedule: Sequence[int] = DEFAULT_SCHEDULE
) -> Trajectory:
    """
    Cesàro 平均をスケジュールの各点で記録

    累積和 Σ_{k<n} T^k x と現在の冪 T^n x だけを保持し、記録点で n で割る

    Args:
        t: DS⁺ 認証済みの核
        x: 初期元
        schedule: 記録する n (狭義単調増加)

    Returns:
        Trajectory: 記録された平均列
    """
    require_certified(t)
    if x.shape != t.shape:
        raise ShapeMismatchError(t.shape, x.shape)
    points = check_schedule(schedule)

    superoperator = t.superoperator
    power = x.to_vector()
    running = np.zeros_like(power)
    averages = []
    wanted = iter(points)
    target = next(wanted)
    for n in range(1, points[-1] + 1):
        running = running + power
        power = superoperator @ power
        if n == target:
            averages.append(x if n == 1 else Operator.from_vector(x.shape, running / n))
            logger.debug(f"Recorded Cesàro average n={n}")
            target = next(wanted, 0)
    return Trajectory(t, x, points, tuple(averages))


def mean_limit(t: KernelRep, x: Operator) -> Operator:
    """
    平均エルゴード極限 x̃ (固定空間への τ 直交射影)

    Args:
        t: DS⁺ 認証済みの核
        x: 元

    Returns:
        Operator: x̃
    """
    return fixed_space(t).project(x)


class CauchyProfile(BaseModel):
    """
    pairwise: (l, m, ‖s_l - s_m‖), to_limit: (n, ‖s_n - x̃‖),
    envelope: (n, max_{n' ≥ n} ‖s_n' - x̃‖)
    """

    norm: str
    pairwise: list[tuple[int, int, float]]
    to_limit: list[tuple[int, float]]
    envelope: list[tuple[int, float]]

    @property
    def final_distance(self) -> float:
        return self.to_limit[-1][1]

    def envelope_non_increasing(self, tol: float = 0.0) -> bool:
        values = [v for _, v in self.envelope]
        return all(b <= a + tol for a, b in zip(values, values[1:], strict=False))


def cauchy_profile(
    traj: Trajectory, n: NormId, limit: Operator | None = None
) -> CauchyProfile:
    """
    記録された平均の相互距離と極限までの距離

    Args:
        traj: 軌道 (記録点 2 個以上)
        n: ノルム
        limit: x̃ (省略時は mean_limit で計算)

    Returns:
        CauchyProfile: 距離の表と裾の包絡線
    """
    check_schedule(traj.schedule, minimum=2)
    if limit is None:
        limit = mean_limit(traj.kernel, traj.x)
    items = traj.items()
    pairwise = [
        (a, b, norm_eval(n, sa - sb)) for (a, sa), (b, sb) in combinations(items, 2)
    ]
    to_limit = [(k, norm_eval(n, s - limit)) for k, s in items]
    envelope = []
    running = 0.0
    for k, distance in reversed(to_limit):
        running = max(running, distance)
        envelope.append((k, running))
    envelope.reverse()
    logger.info(f"Cauchy profile in {n.label}: final distance {to_limit[-1][1]:.3e}")
    return CauchyProfile(norm=n.label, pairwise=pairwise, to_limit=to_limit, envelope=envelope)
