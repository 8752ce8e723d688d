"""
DS⁺ Certification

Choi 行列による完全正値性と T(1) ≤ 1, T†(1) ≤ 1 の厳密な検証
"""

import logging
from typing import Literal

import numpy as np
from pydantic import BaseModel

from ncerg.algebra import Operator
from ncerg.algebra.operator import ComplexArray

from .kernel import KernelRep

logger = logging.getLogger(__name__)

CHOI_TOL = 1e-9
DEFECT_TOL = 1e-9
L2_TOL = 1e-8


class Certification(BaseModel):
    """
    verdict は choi_min_eig ≥ -1e-9, unital_defect ≤ 1e-9, subtrace_defect ≤ 1e-9 のとき pass
    """

    choi_min_eig: float
    unital_defect: float
    subtrace_defect: float
    l2_opnorm: float
    verdict: Literal["pass", "fail"]
    failures: list[str] = []

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"


def choi_blocks(t: KernelRep) -> list[ComplexArray]:
    """
    ブロック間写像 Φ_lk: M_{d_k} → M_{d_l} ごとの Choi 行列 Σ_ij E_ij ⊗ Φ_lk(E_ij)

    T が完全正値であることと全ての Φ_lk が完全正値であることは同値
    """
    shape = t.shape
    offsets = shape.vector_offsets
    blocks = []
    for k, dk in enumerate(shape.dims):
        for m, dl in enumerate(shape.dims):
            sub = t.superoperator[offsets[m] : offsets[m + 1], offsets[k] : offsets[k + 1]]
            # sub[a*dl + b, i*dk + j] = Φ(E_ij)[a, b]  ->  C[(i, a), (j, b)]
            choi = sub.reshape(dl, dl, dk, dk).transpose(2, 0, 3, 1).reshape(dk * dl, dk * dl)
            blocks.append(choi)
    return blocks


def _choi_min_eig(t: KernelRep) -> float:
    worst = np.inf
    for choi in choi_blocks(t):
        hermitian_defect = float(np.max(np.abs(choi - choi.conj().T)))
        lowest = float(np.linalg.eigvalsh((choi + choi.conj().T) / 2)[0])
        worst = min(worst, lowest - hermitian_defect)
    return float(worst)


def _max_excess_over_identity(x: Operator) -> float:
    """λ_max(Re(x) - 1) over all blocks"""
    return max(
        float(np.linalg.eigvalsh((b + b.conj().T) / 2)[-1]) - 1.0 for b in x.blocks
    )


def certify_DS(t: KernelRep) -> Certification:
    """
    核が DS⁺ (完全正値・T(1) ≤ 1・T†(1) ≤ 1) であることを検証

    Args:
        t: 核

    Returns:
        Certification: 各欠損量と判定 (失敗しても例外は投げない)
    """
    one = Operator.identity(t.shape)
    choi_min_eig = _choi_min_eig(t)
    unital_defect = _max_excess_over_identity(t.apply(one))
    subtrace_defect = _max_excess_over_identity(t.trace_adjoint().apply(one))
    l2 = t.l2_opnorm()

    failures = []
    if choi_min_eig < -CHOI_TOL:
        failures.append("choi")
    if unital_defect > DEFECT_TOL:
        failures.append("unital")
    if subtrace_defect > DEFECT_TOL:
        failures.append("subtrace")
    verdict: Literal["pass", "fail"] = "fail" if failures else "pass"

    if verdict == "pass" and l2 > 1.0 + L2_TOL:
        logger.warning(f"Certified kernel has L2 operator norm {l2:.12g} > 1")
    logger.debug(
        f"Certification {verdict}: choi {choi_min_eig:.3e}, unital {unital_defect:.3e}, "
        f"subtrace {subtrace_defect:.3e}, l2 {l2:.12g}"
    )
    return Certification(
        choi_min_eig=choi_min_eig,
        unital_defect=unital_defect,
        subtrace_defect=subtrace_defect,
        l2_opnorm=l2,
        verdict=verdict,
        failures=failures,
    )
