"""
Spectral Calculus

固有値分解・極分解・スペクトル射影と射影束の演算を提供するモジュール
"""

import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from ncerg.errors import AlgebraError, ConvergenceError, NotHermitianError, ShapeMismatchError

from .operator import ComplexArray, Operator
from .shape import AlgebraShape

logger = logging.getLogger(__name__)

HERMITIAN_TOL = 1e-10
JACOBI_TOL = 1e-13
JACOBI_MAX_SWEEPS = 100
BOUNDARY_TOL = 1e-12
MEET_TOL = 1e-9
# singular values below this fraction of the largest one count as kernel
SUPPORT_RTOL = 1e-12


def _off_norm(a: ComplexArray) -> float:
    return float(np.linalg.norm(a - np.diag(np.diag(a))))


def jacobi_eigh(matrix: ComplexArray) -> tuple[NDArray[np.float64], ComplexArray]:
    """
    複素エルミート行列の巡回 Jacobi 法

    掃引順序は (0,1), (0,2), ..., (n-2,n-1) に固定されており、
    同じ入力ビットに対して同じ結果を返す

    Args:
        matrix: エルミート行列

    Returns:
        tuple: 降順の固有値と列が固有ベクトルのユニタリ行列
    """
    a = np.array(matrix, dtype=np.complex128, copy=True)
    a = (a + a.conj().T) / 2
    n = a.shape[0]
    v = np.eye(n, dtype=np.complex128)
    if n == 1:
        return a.diagonal().real.copy(), v

    threshold = JACOBI_TOL * max(1.0, float(np.linalg.norm(a)))
    residual = _off_norm(a)
    sweeps = 0
    while residual > threshold:
        if sweeps >= JACOBI_MAX_SWEEPS:
            raise ConvergenceError(residual, sweeps)
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                r = abs(apq)
                if r < np.finfo(float).tiny:
                    continue
                phase = apq / r
                theta = (a[q, q].real - a[p, p].real) / (2.0 * r)
                if theta == 0.0:
                    t = 1.0
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.hypot(theta, 1.0))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                # diag(1, conj(phase)) makes a[p, q] real, then a real rotation
                rot = np.array(
                    [[c, s], [-s * phase.conjugate(), c * phase.conjugate()]],
                    dtype=np.complex128,
                )
                idx = [p, q]
                a[:, idx] = a[:, idx] @ rot
                a[idx, :] = rot.conj().T @ a[idx, :]
                v[:, idx] = v[:, idx] @ rot
                a[p, q] = 0.0
                a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
        sweeps += 1
        residual = _off_norm(a)
        logger.debug(f"Jacobi sweep {sweeps}: off-diagonal norm {residual:.3e}")

    values = a.diagonal().real.copy()
    order = np.argsort(-values, kind="stable")
    return values[order], v[:, order]


@dataclass(frozen=True)
class SpectralDecomposition:
    """Per-block descending eigenvalues and orthonormal eigenvectors"""

    shape: AlgebraShape
    eigenvalues: tuple[NDArray[np.float64], ...]
    eigenvectors: tuple[ComplexArray, ...]

    def reconstruct(self) -> Operator:
        return self.apply(lambda lam: lam)

    def apply(self, f: Callable[[NDArray[np.float64]], NDArray[np.float64]]) -> Operator:
        """Functional calculus U f(Λ) U*"""
        return Operator(
            self.shape,
            [
                (u * f(lam)) @ u.conj().T
                for lam, u in zip(self.eigenvalues, self.eigenvectors, strict=True)
            ],
        )

    def pooled(self) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        """All eigenvalues with their block weight as mass, sorted descending"""
        values = np.concatenate(self.eigenvalues)
        masses = np.concatenate(
            [np.full(len(lam), w) for lam, w in zip(self.eigenvalues, self.shape.weights, strict=True)]
        )
        order = np.argsort(-values, kind="stable")
        return values[order], masses[order]


def eigh(x: Operator) -> SpectralDecomposition:
    """
    エルミート作用素の固有値分解

    Args:
        x: エルミート作用素 (許容誤差 1e-10)

    Returns:
        SpectralDecomposition: ブロックごとの固有分解
    """
    if not x.is_hermitian(HERMITIAN_TOL):
        raise NotHermitianError(x.hermitian_residual())
    values, vectors = [], []
    for block in x.blocks:
        lam, u = jacobi_eigh(block)
        values.append(lam)
        vectors.append(u)
    return SpectralDecomposition(x.shape, tuple(values), tuple(vectors))


class Projection:
    """
    直交射影 P = P* = P² とブロックごとの階数
    """

    __slots__ = ("operator", "ranks")

    def __init__(self, operator: Operator, ranks: Sequence[int]):
        self.operator = operator
        self.ranks: tuple[int, ...] = tuple(int(r) for r in ranks)

    @classmethod
    def from_columns(cls, shape: AlgebraShape, columns: Sequence[ComplexArray]) -> "Projection":
        """Projection onto the span of orthonormal columns, block by block"""
        blocks = [c @ c.conj().T for c in columns]
        return cls(Operator(shape, blocks), [c.shape[1] for c in columns])

    @classmethod
    def identity(cls, shape: AlgebraShape) -> "Projection":
        return cls(Operator.identity(shape), shape.dims)

    @classmethod
    def zero(cls, shape: AlgebraShape) -> "Projection":
        return cls(Operator.zeros(shape), [0] * len(shape.dims))

    @property
    def shape(self) -> AlgebraShape:
        return self.operator.shape

    @property
    def trace(self) -> float:
        """τ(P), exact from integer ranks"""
        return float(sum(w * r for w, r in zip(self.shape.weights, self.ranks, strict=True)))

    @property
    def defect(self) -> float:
        """τ(1 - P)"""
        return float(
            sum(w * (d - r) for w, d, r in zip(self.shape.weights, self.shape.dims, self.ranks, strict=True))
        )

    @property
    def is_identity(self) -> bool:
        return self.ranks == self.shape.dims

    def complement(self) -> "Projection":
        return Projection(
            Operator.identity(self.shape) - self.operator,
            [d - r for d, r in zip(self.shape.dims, self.ranks, strict=True)],
        )

    def compress(self, x: Operator) -> Operator:
        """P x P"""
        return self.operator @ x @ self.operator

    def residual(self) -> float:
        """max of the Hermitian and idempotence residuals"""
        p = self.operator
        return max(p.hermitian_residual(), (p @ p - p).max_abs())

    def __repr__(self) -> str:
        return f"Projection(ranks={self.ranks}, defect={self.defect:.6g})"


def singular_values(x: Operator) -> tuple[NDArray[np.float64], ...]:
    return tuple(np.linalg.svd(b, compute_uv=False) for b in x.blocks)


def _block_svd(x: Operator) -> list[tuple[ComplexArray, NDArray[np.float64], ComplexArray]]:
    return [np.linalg.svd(b) for b in x.blocks]


def _support_cutoff(svds: list[tuple[ComplexArray, NDArray[np.float64], ComplexArray]]) -> float:
    top = max((float(s[0]) for _, s, _ in svds if s.size), default=0.0)
    return SUPPORT_RTOL * top


def polar_abs(x: Operator) -> tuple[Operator, Operator]:
    """
    極分解 x = phase · |x|

    phase は |x| の台の上の部分等長作用素で、核の上では 0

    Args:
        x: 任意の作用素

    Returns:
        tuple: (|x|, phase)
    """
    svds = _block_svd(x)
    cutoff = _support_cutoff(svds)
    abs_blocks, phase_blocks = [], []
    for u, s, vh in svds:
        v = vh.conj().T
        abs_blocks.append((v * s) @ vh)
        keep = s > cutoff
        phase_blocks.append(u[:, keep] @ vh[keep, :])
    absx = Operator(x.shape, [(b + b.conj().T) / 2 for b in abs_blocks])
    return absx, Operator(x.shape, phase_blocks)


def spectral_projection(x: Operator, lo: float, hi: float) -> Projection:
    """
    固有値が閉区間 [lo, hi] に入る固有空間への射影

    境界から 1e-12 以内の固有値は含める

    Args:
        x: エルミート作用素
        lo: 下端 (-inf 可)
        hi: 上端 (inf 可)

    Returns:
        Projection: スペクトル射影
    """
    if lo > hi:
        raise AlgebraError(f"Empty interval [{lo}, {hi}]")
    decomposition = eigh(x)
    columns = []
    for lam, u in zip(decomposition.eigenvalues, decomposition.eigenvectors, strict=True):
        mask = (lam >= lo - BOUNDARY_TOL) & (lam <= hi + BOUNDARY_TOL)
        columns.append(u[:, mask])
    return Projection.from_columns(x.shape, columns)


def spectral_truncate(x: Operator, level: float) -> tuple[Operator, Operator]:
    """
    x を高い部分と平らな部分に分割

    tall = phase · (|x| - level)_+ , flat = x - tall
    ‖flat‖∞ ≤ level, ‖tall‖₁ = ∫ (μ_t(x) - level)_+ dt

    Args:
        x: 作用素
        level: 切断レベル (≥ 0)

    Returns:
        tuple: (tall, flat)
    """
    if level < 0:
        raise AlgebraError(f"Truncation level must be non-negative, got {level}")
    if level == 0:
        return x, Operator.zeros(x.shape)
    tall_blocks = []
    for u, s, vh in _block_svd(x):
        tall_blocks.append((u * np.maximum(s - level, 0.0)) @ vh)
    tall = Operator(x.shape, tall_blocks)
    return tall, x - tall


def meet_projections(ps: Sequence[Projection]) -> Projection:
    """
    射影の共通部分 ∧ P_i

    Σ (1 - P_i) の固有値 0 の固有空間として計算する

    Args:
        ps: 同じ形状の射影 (1 個以上)

    Returns:
        Projection: 値域の共通部分への射影
    """
    if not ps:
        raise AlgebraError("meet_projections needs at least one projection")
    shape = ps[0].shape
    for p in ps[1:]:
        if p.shape != shape:
            raise ShapeMismatchError(shape, p.shape)
    if len(ps) == 1:
        return ps[0]
    if all(p.is_identity for p in ps):
        return Projection.identity(shape)

    total = Operator.zeros(shape)
    for p in ps:
        if not p.is_identity:
            total = total + p.complement().operator
    meet = spectral_projection(total, -MEET_TOL, MEET_TOL)

    bound = sum(p.defect for p in ps)
    if meet.defect > bound + MEET_TOL * shape.total_trace:
        raise AlgebraError(
            f"Meet defect {meet.defect} exceeds subadditive bound {bound}"
        )
    return meet


def positive_parts(x: Operator) -> tuple[Operator, Operator, Operator, Operator]:
    """
    Jordan 分解 x = (p1 - p2) + i (p3 - p4), 各 p_j は正作用素

    Args:
        x: 任意の作用素

    Returns:
        tuple: (p1, p2, p3, p4)
    """
    real = (x + x.adjoint()).scale(0.5)
    imag = (x - x.adjoint()).scale(-0.5j)
    parts: list[Operator] = []
    for h in (real, imag):
        decomposition = eigh(h)
        parts.append(decomposition.apply(lambda lam: np.maximum(lam, 0.0)))
        parts.append(decomposition.apply(lambda lam: np.maximum(-lam, 0.0)))
    return parts[0], parts[1], parts[2], parts[3]
