"""
Random Elements

シード固定の乱数による作用素・ユニタリ・射影の生成

分布: 各ブロック G = (A + iB)/√2, A, B は独立な標準正規行列
  general    G
  hermitian  (G + G*)/2
  psd        G G* / d
  projection QR(G) の先頭 r 列への射影 (階数はブロック順に詰める)
"""

import logging
from enum import Enum

import numpy as np
from scipy.stats import unitary_group

from ncerg.errors import AlgebraError

from .operator import ComplexArray, Operator
from .shape import AlgebraShape
from .spectral import Projection

logger = logging.getLogger(__name__)


class OperatorKind(str, Enum):
    GENERAL = "general"
    HERMITIAN = "hermitian"
    PSD = "psd"
    PROJECTION = "projection"


def _gaussian(rng: np.random.Generator, d: int) -> ComplexArray:
    return (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2.0)


def random_projection(shape: AlgebraShape, rank_budget: int, seed: int) -> Projection:
    """
    総階数 rank_budget のランダム射影

    Args:
        shape: 形状
        rank_budget: Σ_k rank_k
        seed: 乱数シード

    Returns:
        Projection: 射影
    """
    if rank_budget < 0 or rank_budget > shape.hilbert_dim:
        raise AlgebraError(
            f"Rank budget {rank_budget} outside [0, {shape.hilbert_dim}] for shape {shape}"
        )
    rng = np.random.default_rng(seed)
    remaining = rank_budget
    columns = []
    for d in shape.dims:
        r = min(d, remaining)
        remaining -= r
        q, _ = np.linalg.qr(_gaussian(rng, d))
        columns.append(q[:, :r])
    return Projection.from_columns(shape, columns)


def random_operator(
    shape: AlgebraShape,
    kind: OperatorKind | str = OperatorKind.GENERAL,
    seed: int = 0,
    rank_budget: int | None = None,
) -> Operator:
    """
    (shape, kind, seed) に対して決定的なランダム作用素

    Args:
        shape: 形状
        kind: 種類
        seed: 乱数シード
        rank_budget: projection の総階数

    Returns:
        Operator: 生成された作用素
    """
    kind = OperatorKind(kind)
    if kind is OperatorKind.PROJECTION:
        if rank_budget is None:
            raise AlgebraError("projection kind needs a rank_budget")
        return random_projection(shape, rank_budget, seed).operator

    rng = np.random.default_rng(seed)
    blocks = []
    for d in shape.dims:
        g = _gaussian(rng, d)
        if kind is OperatorKind.HERMITIAN:
            g = (g + g.conj().T) / 2
        elif kind is OperatorKind.PSD:
            g = g @ g.conj().T / d
            g = (g + g.conj().T) / 2
        blocks.append(g)
    return Operator(shape, blocks)


def random_unitary(shape: AlgebraShape, seed: int) -> Operator:
    """Block-diagonal Haar unitary"""
    rng = np.random.default_rng(seed)
    blocks = []
    for d in shape.dims:
        if d == 1:
            blocks.append(np.exp(2j * np.pi * rng.random((1, 1))))
        else:
            blocks.append(unitary_group.rvs(d, random_state=rng))
    return Operator(shape, blocks)


def derive_seeds(seed: int, count: int) -> list[int]:
    """Independent per-trial seeds derived from one master seed"""
    state = np.random.SeedSequence(seed).generate_state(count, dtype=np.uint64)
    return [int(s) for s in state]
