"""
Projection Witnesses

両側ほとんど至る所 (d.s.a.e.) 収束の射影証人と有限次元版の最大不等式
"""

import logging
from collections.abc import Sequence
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from ncerg.algebra import (
    Operator,
    Projection,
    SpectralDecomposition,
    eigh,
    trace,
)
from ncerg.algebra.spectral import BOUNDARY_TOL, HERMITIAN_TOL, JACOBI_TOL
from ncerg.errors import AlgebraError, ShapeMismatchError
from ncerg.kernels import KernelRep
from ncerg.rearrangement import LINF, L1, norm_eval

from .cesaro import DEFAULT_SCHEDULE, cesaro, require_certified

logger = logging.getLogger(__name__)

AUDIT_TOL = 1e-9


class ProjectionWitness(BaseModel):
    """
    射影 E と、記録した各点での ‖E z_n E‖∞

    valid は defect < budget かつ achieved_bound ≤ bound のとき真
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    defect: float
    budget: float
    bound: float
    level: float
    indices: list[int]
    uniform_norms: list[float]
    one_sided_norms: list[float] = []
    certified_bounds: list[float] = []
    achieved_bound: float
    estimate: float | None = None
    valid: bool
    failure: str | None = None

    projection: Projection = Field(exclude=True, repr=False)
    targets: tuple[Operator, ...] = Field(default=(), exclude=True, repr=False)


def _dyadic_weights(count: int) -> np.ndarray:
    alpha = 0.5 ** np.arange(1, count + 1)
    return alpha / alpha.sum()


def _descending_levels(decomposition: SpectralDecomposition) -> list[tuple[float, float]]:
    """Distinct eigenvalue levels (descending) with their τ-mass; ties within BOUNDARY_TOL merge"""
    values, masses = decomposition.pooled()
    levels: list[list[float]] = []
    for v, m in zip(values, masses, strict=True):
        if levels and levels[-1][0] - v <= BOUNDARY_TOL:
            levels[-1][1] += float(m)
        else:
            levels.append([float(v), float(m)])
    return [(v, m) for v, m in levels]


def _sublevel_projection(decomposition: SpectralDecomposition, level: float) -> Projection:
    """χ_{(-∞, level]}(h) from a precomputed decomposition"""
    columns = [
        u[:, lam <= level + BOUNDARY_TOL]
        for lam, u in zip(decomposition.eigenvalues, decomposition.eigenvectors, strict=True)
    ]
    return Projection.from_columns(decomposition.shape, columns)


def _compressed_norms(e: Projection, zs: Sequence[Operator]) -> list[float]:
    return [norm_eval(LINF, e.compress(z)) for z in zs]


def dsae_check(
    xs: Sequence[Operator],
    x0: Operator,
    epsilon: float,
    bound: float,
    indices: Sequence[int] | None = None,
) -> ProjectionWitness:
    """
    τ(1 - E) < epsilon かつ max_n ‖E(x_n - x0)E‖∞ ≤ bound となる射影 E を探す

    h = Σ α_n (x_n - x0)*(x_n - x0), α_n ∝ 2^{-n} の最上位の固有値の層を
    除外トレースが epsilon 未満に収まる限り取り除き、E = χ_{[0, λ]}(h) とする

    Args:
        xs: 列 x_1, x_2, ...
        x0: 極限の候補
        epsilon: トレース予算 (0 < epsilon < τ(1))
        bound: 一様ノルムの上限
        indices: 記録用の添字 (省略時は 1, 2, ...)

    Returns:
        ProjectionWitness: 証人 (失敗時も valid=False で返す)
    """
    if not xs:
        raise AlgebraError("dsae_check needs at least one element")
    shape = x0.shape
    for x in xs:
        if x.shape != shape:
            raise ShapeMismatchError(shape, x.shape)
    if not 0.0 < epsilon < shape.total_trace:
        raise AlgebraError(f"epsilon must lie in (0, {shape.total_trace}), got {epsilon}")
    if bound <= 0:
        raise AlgebraError(f"bound must be positive, got {bound}")
    labels = list(indices) if indices is not None else list(range(1, len(xs) + 1))

    differences = [x - x0 for x in xs]
    alpha = _dyadic_weights(len(differences))
    h = Operator.zeros(shape)
    for a, d in zip(alpha, differences, strict=True):
        h = h + (d.adjoint() @ d).scale(a)
    h = (h + h.adjoint()).scale(0.5)
    decomposition = eigh(h)

    excluded, level = 0.0, 0.0
    for value, mass in _descending_levels(decomposition):
        if excluded + mass < epsilon:
            excluded += mass
            continue
        level = max(value, 0.0)
        break
    e = _sublevel_projection(decomposition, level)

    uniform = _compressed_norms(e, differences)
    one_sided = [norm_eval(LINF, d @ e.operator) for d in differences]
    slack = BOUNDARY_TOL + JACOBI_TOL * max(1.0, h.max_abs() * h.shape.hilbert_dim)
    certified = [float(np.sqrt((level + slack) / a)) for a in alpha]
    achieved = max(uniform)
    failure = None
    if e.defect >= epsilon:
        failure = f"trace budget unreachable: defect {e.defect:.6g} >= epsilon {epsilon:.6g}"
    elif achieved > bound:
        failure = f"uniform bound not met: {achieved:.6g} > {bound:.6g}"
    logger.debug(f"d.s.a.e. witness level {level:.3e}, defect {e.defect:.3e}, achieved {achieved:.3e}")
    return ProjectionWitness(
        defect=e.defect,
        budget=epsilon,
        bound=bound,
        level=level,
        indices=labels,
        uniform_norms=uniform,
        one_sided_norms=one_sided,
        certified_bounds=certified,
        achieved_bound=achieved,
        valid=failure is None,
        failure=failure,
        projection=e,
        targets=tuple(differences),
    )


def _check_psd(y: Operator) -> None:
    if not y.is_hermitian(HERMITIAN_TOL):
        raise AlgebraError(f"Expected a PSD operator (hermitian residual {y.hermitian_residual():.3e})")
    lowest = min(float(lam[-1]) for lam in eigh(y).eigenvalues if lam.size)
    if lowest < -HERMITIAN_TOL * max(1.0, y.max_abs()):
        raise AlgebraError(f"Expected a PSD operator (min eigenvalue {lowest:.3e})")


def maximal_projection(
    t: KernelRep,
    y: Operator,
    bound: float,
    schedule: Sequence[int] = DEFAULT_SCHEDULE,
    epsilon: float | None = None,
) -> ProjectionWitness:
    """
    全ての記録点 l で ‖E s_l(T)y E‖∞ ≤ bound となる射影 E (最大不等式の有限版)

    h = Σ α_l s_l(T)y の固有値の層を上から調べ、直接検証を通る最大の E を返す。
    χ_{[0, bound·min α]}(h) は常に通るので τ(1 - E) ≤ ‖y‖₁ / (bound·min α)

    Args:
        t: DS⁺ 認証済みの核
        y: 正作用素
        bound: 一様ノルムの上限
        schedule: 平均を取る l
        epsilon: トレース予算 (省略時は検証しない)

    Returns:
        ProjectionWitness: 証人 (estimate に Chebyshev 型の評価を記録)
    """
    require_certified(t)
    if bound <= 0:
        raise AlgebraError(f"bound must be positive, got {bound}")
    _check_psd(y)
    trajectory = cesaro(t, y, schedule)
    averages = list(trajectory.averages)
    alpha = _dyadic_weights(len(averages))
    certified_level = bound * float(alpha.min())
    estimate = norm_eval(L1, y) / certified_level

    if max(norm_eval(LINF, a) for a in averages) <= bound:
        e = Projection.identity(y.shape)
        level = float("inf")
    else:
        h = Operator.zeros(y.shape)
        for a, avg in zip(alpha, averages, strict=True):
            h = h + avg.scale(a)
        h = (h + h.adjoint()).scale(0.5)
        decomposition = eigh(h)
        e, level = Projection.zero(y.shape), 0.0
        for value, _ in _descending_levels(decomposition):
            candidate = _sublevel_projection(decomposition, value)
            if max(_compressed_norms(candidate, averages)) <= bound:
                e, level = candidate, value
                break

    uniform = _compressed_norms(e, averages)
    achieved = max(uniform)
    budget = epsilon if epsilon is not None else float("inf")
    failure = None
    if achieved > bound:
        failure = f"uniform bound not met: {achieved:.6g} > {bound:.6g}"
    elif epsilon is not None and e.defect >= epsilon:
        failure = f"trace budget exceeded: defect {e.defect:.6g} >= epsilon {epsilon:.6g}"
    return ProjectionWitness(
        defect=e.defect,
        budget=budget,
        bound=bound,
        level=level,
        indices=list(trajectory.schedule),
        uniform_norms=uniform,
        achieved_bound=achieved,
        estimate=estimate,
        valid=failure is None,
        failure=failure,
        projection=e,
        targets=tuple(averages),
    )


def audit_witness(witness: ProjectionWitness) -> list[str]:
    """
    保存された射影と作用素から記録値を再計算して照合

    Args:
        witness: 証人

    Returns:
        list[str]: 食い違いの説明 (空なら一致)
    """
    problems: list[str] = []
    e = witness.projection
    scale = max(1.0, e.shape.total_trace)
    if e.residual() > AUDIT_TOL:
        problems.append(f"E is not a projection (residual {e.residual():.3e})")
    direct_defect = e.shape.total_trace - trace(e.operator).real
    if abs(direct_defect - witness.defect) > AUDIT_TOL * scale:
        problems.append(f"defect {witness.defect} != recomputed {direct_defect}")
    if witness.targets:
        recomputed = _compressed_norms(e, witness.targets)
        for index, (recorded, fresh) in enumerate(
            zip(witness.uniform_norms, recomputed, strict=True)
        ):
            if abs(recorded - fresh) > AUDIT_TOL * max(1.0, fresh):
                problems.append(f"uniform norm #{index}: {recorded} != recomputed {fresh}")
        if abs(witness.achieved_bound - max(recomputed)) > AUDIT_TOL * max(1.0, max(recomputed)):
            problems.append("achieved_bound is not the maximum of the recorded norms")
        for index, (one_sided, certified) in enumerate(
            zip(witness.one_sided_norms, witness.certified_bounds, strict=False)
        ):
            if one_sided > certified * (1.0 + AUDIT_TOL) + AUDIT_TOL:
                problems.append(f"‖z E‖ #{index} = {one_sided} exceeds √(λ/α) = {certified}")
    expected_valid = witness.defect < witness.budget and witness.achieved_bound <= witness.bound
    if expected_valid != witness.valid:
        problems.append(f"valid={witness.valid} disagrees with recorded numbers")
    if witness.estimate is not None and witness.defect > witness.estimate * (1.0 + AUDIT_TOL):
        problems.append(f"defect {witness.defect} exceeds the recorded estimate {witness.estimate}")
    return problems


def witness_summary(witness: ProjectionWitness) -> dict[str, Any]:
    return witness.model_dump()
