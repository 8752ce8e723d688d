"""
Contraction Check

認証済みの核が各対称ノルムで縮小であり劣多数化を保つことの標本検証
"""

import logging
from collections.abc import Sequence

from pydantic import BaseModel

from ncerg.algebra import Operator
from ncerg.rearrangement import NormId, majorization_check, norm_eval

from .kernel import KernelRep

logger = logging.getLogger(__name__)

CONTRACTION_RTOL = 1e-9


class NormContraction(BaseModel):
    norm: str
    worst_ratio: float
    passes: bool


class ContractionReport(BaseModel):
    samples: int
    norms: list[NormContraction]
    submajorized: bool
    worst_margin: float

    @property
    def passes(self) -> bool:
        return self.submajorized and all(n.passes for n in self.norms)


def contraction_check(
    t: KernelRep, xs: Sequence[Operator], norms: Sequence[NormId]
) -> ContractionReport:
    """
    ‖Tx‖_L / ‖x‖_L の最大値と Tx ≺≺ x の成立を調べる

    Args:
        t: 核
        xs: 標本
        norms: 検査するノルム

    Returns:
        ContractionReport: ノルムごとの最悪比と劣多数化の判定
    """
    images = [t.apply(x) for x in xs]
    results = []
    for n in norms:
        worst = 0.0
        for x, tx in zip(xs, images, strict=True):
            base = norm_eval(n, x)
            if base > 0.0:
                worst = max(worst, norm_eval(n, tx) / base)
        results.append(
            NormContraction(norm=n.label, worst_ratio=worst, passes=worst <= 1.0 + CONTRACTION_RTOL)
        )

    submajorized, worst_margin = True, 0.0
    for x, tx in zip(xs, images, strict=True):
        report = majorization_check(tx, x)
        submajorized = submajorized and report.holds
        worst_margin = min(worst_margin, report.worst_margin)

    report = ContractionReport(
        samples=len(xs), norms=results, submajorized=submajorized, worst_margin=worst_margin
    )
    logger.info(f"Contraction check on {len(xs)} samples: {'pass' if report.passes else 'fail'}")
    return report
