"""
Norm Probes

部分積分による劣多数化の判定・対称ノルムの公理検定・埋め込み定数の標本推定
"""

import logging

import numpy as np
from pydantic import BaseModel

from ncerg.algebra import (
    AlgebraShape,
    Operator,
    OperatorKind,
    derive_seeds,
    eigh,
    random_operator,
    random_unitary,
)
from ncerg.errors import AlgebraError, ShapeMismatchError

from .norms import L1_CAP_LINF, LINF, R0, NormId, norm_eval
from .step import mu

logger = logging.getLogger(__name__)

MAJORIZATION_TOL = 1e-9
AXIOM_TOL = 1e-8
# random samples are rescaled by 10**u with u uniform on this range
EMBEDDING_SCALE_EXPONENTS = (-2.0, 2.0)


class MajorizationReport(BaseModel):
    holds: bool
    worst_margin: float
    checked_points: int


def majorization_check(x: Operator, y: Operator) -> MajorizationReport:
    """
    劣多数化 x ≺≺ y の判定

    両方の階段関数の全ての折れ点 s で ∫_0^s μ(y) - ∫_0^s μ(x) ≥ -1e-9 を検証する

    Args:
        x: 被支配側
        y: 支配側

    Returns:
        MajorizationReport: 判定と最小余裕
    """
    if x.shape != y.shape:
        raise ShapeMismatchError(x.shape, y.shape)
    mx, my = mu(x), mu(y)
    points = np.union1d(mx.breakpoints, my.breakpoints)
    if points.size == 0:
        return MajorizationReport(holds=True, worst_margin=0.0, checked_points=0)
    margins = [my.integral(s) - mx.integral(s) for s in points]
    worst = float(min(margins))
    scale = max(1.0, my.integral(), mx.integral())
    holds = worst >= -MAJORIZATION_TOL * scale
    return MajorizationReport(holds=holds, worst_margin=worst, checked_points=int(points.size))


class AxiomResult(BaseModel):
    axiom: str
    passes: bool
    worst_violation: float


class NormAxiomReport(BaseModel):
    norm: str
    trials: int
    axioms: list[AxiomResult]

    @property
    def passes(self) -> bool:
        return all(a.passes for a in self.axioms)

    def result(self, axiom: str) -> AxiomResult:
        for a in self.axioms:
            if a.axiom == axiom:
                return a
        raise KeyError(axiom)


def _monotone_pair(x_seed: int, shape: AlgebraShape) -> tuple[Operator, Operator]:
    """PSD x and y = x + nonnegative shift on the same eigenbasis, so μ(x) ≤ μ(y)"""
    x = random_operator(shape, OperatorKind.PSD, x_seed)
    decomposition = eigh(x)
    rng = np.random.default_rng(x_seed)
    shifts = [rng.random(lam.size) for lam in decomposition.eigenvalues]
    y = Operator(
        shape,
        [
            (u * (np.maximum(lam, 0.0) + delta)) @ u.conj().T
            for lam, u, delta in zip(
                decomposition.eigenvalues, decomposition.eigenvectors, shifts, strict=True
            )
        ],
    )
    x = decomposition.apply(lambda lam: np.maximum(lam, 0.0))
    return x, y


def norm_axiom_suite(n: NormId, shape: AlgebraShape, seed: int, trials: int) -> NormAxiomReport:
    """
    対称ノルムの公理 (斉次性・三角不等式・ユニタリ不変性・対称性) を乱数標本で検定

    違反量は相対値で、1e-8 以下なら合格

    Args:
        n: ノルム
        shape: 形状
        seed: 乱数シード
        trials: 標本数

    Returns:
        NormAxiomReport: 公理ごとの判定
    """
    if trials < 1:
        raise AlgebraError(f"trials must be >= 1, got {trials}")
    worst = {"homogeneity": 0.0, "triangle": 0.0, "unitary_invariance": 0.0, "symmetry": 0.0}
    seeds = derive_seeds(seed, 5 * trials)
    rng = np.random.default_rng(seed)

    for i in range(trials):
        s = seeds[5 * i : 5 * i + 5]
        x = random_operator(shape, OperatorKind.GENERAL, s[0])
        y = random_operator(shape, OperatorKind.GENERAL, s[1])
        nx, ny = norm_eval(n, x), norm_eval(n, y)

        c = -2.0 if i == 0 else float(rng.uniform(-5.0, 5.0))
        ncx = norm_eval(n, x.scale(c))
        worst["homogeneity"] = max(
            worst["homogeneity"], abs(ncx - abs(c) * nx) / max(1.0, abs(c) * nx)
        )

        nxy = norm_eval(n, x + y)
        worst["triangle"] = max(worst["triangle"], (nxy - nx - ny) / max(1.0, nx + ny))

        u = random_unitary(shape, s[2])
        v = random_unitary(shape, s[3])
        nuxv = norm_eval(n, u @ x @ v)
        worst["unitary_invariance"] = max(
            worst["unitary_invariance"], abs(nuxv - nx) / max(1.0, nx)
        )

        lower, upper = _monotone_pair(s[4], shape)
        nl, nu = norm_eval(n, lower), norm_eval(n, upper)
        worst["symmetry"] = max(worst["symmetry"], (nl - nu) / max(1.0, nu))

    axioms = [
        AxiomResult(axiom=name, passes=value <= AXIOM_TOL, worst_violation=value)
        for name, value in worst.items()
    ]
    report = NormAxiomReport(norm=n.label, trials=trials, axioms=axioms)
    logger.info(f"Axiom suite for {n.label}: {'pass' if report.passes else 'fail'}")
    return report


class EmbeddingReport(BaseModel):
    """
    C_upper: ‖x‖_L ≤ C_upper · ‖x‖_{L1capLinf}
    C_upper_linf: ‖x‖_L ≤ C_upper_linf · ‖x‖∞ (非極小ノルムの L∞ ⊆ L 側)
    C_lower: ‖x‖_R0 ≤ C_lower · ‖x‖_L

    minimal は報告のみで、計算には使わない
    """

    norm: str
    minimal: bool
    trials: int
    c_lower: float
    c_upper: float
    c_upper_linf: float


def embedding_probe(n: NormId, shape: AlgebraShape, seed: int, trials: int) -> EmbeddingReport:
    """
    L1∩L∞ ⊆ L ⊆ R0 の埋め込み定数と、非極小の場合の L∞ ⊆ L の定数を標本から推定

    Args:
        n: ノルム
        shape: 形状
        seed: 乱数シード
        trials: 標本数

    Returns:
        EmbeddingReport: 標本上の最大比
    """
    if trials < 1:
        raise AlgebraError(f"trials must be >= 1, got {trials}")
    minimal = n.minimal
    seeds = derive_seeds(seed, trials)
    rng = np.random.default_rng(seed)
    lo, hi = EMBEDDING_SCALE_EXPONENTS

    c_lower, c_upper, c_upper_linf = 0.0, 0.0, 0.0
    for s in seeds:
        x = random_operator(shape, OperatorKind.GENERAL, s).scale(10.0 ** rng.uniform(lo, hi))
        value = norm_eval(n, x)
        if value == 0.0:
            continue
        c_upper = max(c_upper, value / norm_eval(L1_CAP_LINF, x))
        c_upper_linf = max(c_upper_linf, value / norm_eval(LINF, x))
        c_lower = max(c_lower, norm_eval(R0, x) / value)

    logger.info(
        f"Embedding probe for {n.label}: C_lower={c_lower:.6g}, C_upper={c_upper:.6g}"
    )
    return EmbeddingReport(
        norm=n.label,
        minimal=minimal,
        trials=trials,
        c_lower=c_lower,
        c_upper=c_upper,
        c_upper_linf=c_upper_linf,
    )
