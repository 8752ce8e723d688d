"""
Symmetric Norms

L1, L∞, L1∩L∞, L1+L∞ (= R0 のノルム) と Orlicz ノルムの評価
"""

import logging
import re
from dataclasses import dataclass
from enum import Enum

import numpy as np

from ncerg.algebra import Operator, singular_values, spectral_truncate
from ncerg.errors import NormParseError, OrliczError

from .orlicz import GrowthRegime, OrliczFunction, delta2_check, luxemburg_norm
from .step import StepFunction, mu

logger = logging.getLogger(__name__)

SEARCH_POINTS = 1000


class NormKind(str, Enum):
    L1 = "L1"
    LINF = "Linf"
    L1_CAP_LINF = "L1capLinf"
    L1_PLUS_LINF = "L1plusLinf"
    ORLICZ = "Orlicz"


_ORLICZ_PATTERN = re.compile(r"^Orlicz\((?P<spec>[^)]*)\)$")
_ALIASES = {"R0": NormKind.L1_PLUS_LINF}


@dataclass(frozen=True)
class NormId:
    """
    対称空間 L とそのノルムの識別子

    minimal は報告用の宣言属性 (有限モデルでは F が全体を張るので計算には使わない)
    """

    kind: NormKind
    psi: OrliczFunction | None = None

    def __post_init__(self) -> None:
        if (self.kind is NormKind.ORLICZ) != (self.psi is not None):
            raise OrliczError("Orlicz norms, and only they, carry an Orlicz function")

    @classmethod
    def parse(cls, text: str) -> "NormId":
        """
        'L1', 'Linf', 'L1capLinf', 'L1plusLinf' ('R0'), 'Orlicz(power:2)' を解釈

        Args:
            text: ノルム名

        Returns:
            NormId: 識別子
        """
        text = text.strip()
        if text in _ALIASES:
            return cls(_ALIASES[text])
        match = _ORLICZ_PATTERN.match(text)
        if match:
            return cls(NormKind.ORLICZ, OrliczFunction.parse(match.group("spec")))
        try:
            return cls(NormKind(text))
        except ValueError as e:
            raise NormParseError(f"Unknown norm '{text}'") from e

    @property
    def label(self) -> str:
        if self.psi is not None:
            return f"Orlicz({self.psi.spec})"
        return self.kind.value

    @property
    def minimal(self) -> bool:
        if self.kind is NormKind.LINF:
            return False
        if self.psi is not None:
            return all(
                delta2_check(self.psi, regime).passes for regime in GrowthRegime
            )
        return True

    def __str__(self) -> str:
        return self.label


L1 = NormId(NormKind.L1)
LINF = NormId(NormKind.LINF)
L1_CAP_LINF = NormId(NormKind.L1_CAP_LINF)
R0 = NormId(NormKind.L1_PLUS_LINF)


def step_norm(n: NormId, step: StepFunction) -> float:
    """Norm of any operator whose rearrangement is `step`"""
    if n.kind is NormKind.L1:
        return step.integral()
    if n.kind is NormKind.LINF:
        return step.sup
    if n.kind is NormKind.L1_CAP_LINF:
        return max(step.integral(), step.sup)
    if n.kind is NormKind.L1_PLUS_LINF:
        return step.integral(1.0)
    assert n.psi is not None
    return luxemburg_norm(n.psi, step)


def norm_eval(n: NormId, x: Operator) -> float:
    """
    ‖x‖_L を μ(x) から評価

    Args:
        n: ノルム
        x: 作用素

    Returns:
        float: ノルム値
    """
    return step_norm(n, mu(x))


def orlicz_norm(psi: OrliczFunction, x: Operator) -> float:
    return luxemburg_norm(psi, mu(x))


def k_decomposition(x: Operator) -> tuple[Operator, Operator]:
    """
    ‖x1‖₁ + ‖x2‖∞ = ∫_0^1 μ を達成する最適分解

    切断レベルは μ_1(x) (総質量 ≤ 1 なら 0)

    Args:
        x: 作用素

    Returns:
        tuple: (x1, x2)
    """
    level = mu(x).value_at(1.0)
    logger.debug(f"K-decomposition cut level {level:.6g}")
    return spectral_truncate(x, level)


def k_functional_by_search(x: Operator, points: int = SEARCH_POINTS) -> float:
    """
    inf{‖x1‖₁ + ‖x2‖∞} を切断レベルの格子上で最小化

    格子は [0, ‖x‖∞] の一様 points 点と特異値そのものの和集合
    (最小値は特異値のどれかで達成される)。μ を経由せず生の特異値から計算する

    Args:
        x: 作用素
        points: 一様格子の点数

    Returns:
        float: 格子上の最小値
    """
    sv = singular_values(x)
    weights = [np.full(s.size, w) for s, w in zip(sv, x.shape.weights, strict=True)]
    values = np.concatenate(sv)
    masses = np.concatenate(weights)
    top = float(values.max(initial=0.0))
    levels = np.union1d(np.linspace(0.0, top, points), values)
    excess = np.array([np.sum(masses * np.maximum(values - c, 0.0)) for c in levels])
    return float(np.min(excess + np.minimum(levels, top)))
