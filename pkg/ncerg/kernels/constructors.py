"""
Kernel Constructors

DS⁺ 核の代表的な族 (ユニタリ混合・ピンチング・Markov・Schur 乗数) と合成・共役
"""

import logging
from collections.abc import Sequence

import numpy as np
from numpy.typing import ArrayLike

from ncerg.algebra import AlgebraShape, Operator
from ncerg.algebra.operator import ComplexArray
from ncerg.errors import KernelError, ShapeMismatchError

from .certify import certify_DS
from .kernel import KernelRep, dense_indices
from .recipes import (
    CombineMode,
    CombineRecipe,
    ConjugatedRecipe,
    MarkovRecipe,
    PinchingRecipe,
    SchurRecipe,
    UnitaryMixtureRecipe,
    from_complex_matrix,
)

logger = logging.getLogger(__name__)

WEIGHT_SUM_TOL = 1e-12
UNITARY_TOL = 1e-10
STOCHASTIC_TOL = 1e-12
PSD_TOL = 1e-10
# entries of u below this are treated as structural zeros when matching blocks
BLOCK_SUPPORT_TOL = 1e-10


def _check_probabilities(weights: Sequence[float]) -> np.ndarray:
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or w.size == 0:
        raise KernelError("Weights must be a non-empty list")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise KernelError(f"Weights must be finite and non-negative, got {w.tolist()}")
    if abs(float(w.sum()) - 1.0) > WEIGHT_SUM_TOL:
        raise KernelError(f"Weights sum to {w.sum():.15g}, expected 1")
    return w


def _as_dense_unitary(shape: AlgebraShape, u: Operator | ArrayLike) -> ComplexArray:
    if isinstance(u, Operator):
        if u.shape != shape:
            raise ShapeMismatchError(shape, u.shape)
        return u.to_dense()
    matrix = np.asarray(u, dtype=np.complex128)
    n = shape.hilbert_dim
    if matrix.shape != (n, n):
        raise ShapeMismatchError(f"unitary {matrix.shape}", shape)
    return matrix


def _check_block_permutation(shape: AlgebraShape, u: ComplexArray, index: int) -> None:
    """u must carry each block onto a single block of equal (dim, weight)"""
    offsets = shape.hilbert_offsets
    blocks = list(zip(shape.dims, shape.weights, strict=True))
    for k in range(len(blocks)):
        cols = slice(offsets[k], offsets[k + 1])
        targets = [
            j
            for j in range(len(blocks))
            if np.max(np.abs(u[offsets[j] : offsets[j + 1], cols])) > BLOCK_SUPPORT_TOL
        ]
        if len(targets) != 1:
            raise KernelError(f"Unitary {index} spreads block {k} over blocks {targets}")
        if blocks[targets[0]] != blocks[k]:
            raise KernelError(
                f"Unitary {index} maps block {k} {blocks[k]} onto block "
                f"{targets[0]} {blocks[targets[0]]}; trace would not be preserved"
            )


def from_unitary_mixture(
    shape: AlgebraShape,
    weights: Sequence[float],
    unitaries: Sequence[Operator | ArrayLike],
) -> KernelRep:
    """
    T(x) = Σ w_i u_i x u_i*

    u_i は N×N のユニタリ行列 (ブロック対角なら Operator でも可)。
    同じ (次元, 重み) のブロック間の置換を含んでよい

    Args:
        shape: 形状
        weights: 確率ベクトル
        unitaries: ユニタリ

    Returns:
        KernelRep: 核
    """
    w = _check_probabilities(weights)
    if len(unitaries) != w.size:
        raise KernelError(f"{w.size} weights for {len(unitaries)} unitaries")
    n = shape.hilbert_dim
    idx = dense_indices(shape)
    superoperator = np.zeros((shape.superdim, shape.superdim), dtype=np.complex128)
    dense = []
    for i, (wi, raw) in enumerate(zip(w, unitaries, strict=True)):
        u = _as_dense_unitary(shape, raw)
        defect = float(np.max(np.abs(u.conj().T @ u - np.eye(n))))
        if defect > UNITARY_TOL:
            raise KernelError(f"Unitary {i} is not unitary (defect {defect:.3e})")
        _check_block_permutation(shape, u, i)
        # vec_row(u X u*) = (u ⊗ conj(u)) vec_row(X)
        superoperator += wi * np.kron(u, u.conj())[np.ix_(idx, idx)]
        dense.append(u)
    recipe = UnitaryMixtureRecipe(
        weights=w.tolist(), unitaries=[from_complex_matrix(u) for u in dense]
    )
    return KernelRep(shape, superoperator, recipe)


def cyclic_shift(shape: AlgebraShape) -> ComplexArray:
    """
    全巡回置換の置換行列 (e_i ↦ e_{i+1 mod N})

    対角かつ重みが一様な形状でのみ重み保存
    """
    if not shape.is_diagonal:
        raise KernelError(f"Cyclic shift needs a diagonal shape, got {shape}")
    n = shape.hilbert_dim
    return np.roll(np.eye(n, dtype=np.complex128), 1, axis=0)


def _check_partition(dim: int, cells: Sequence[Sequence[int]], block: int) -> None:
    seen: list[int] = []
    for cell in cells:
        if not cell:
            raise KernelError(f"Empty cell in the partition of block {block}")
        seen.extend(cell)
    if sorted(seen) != list(range(dim)):
        raise KernelError(
            f"Partition of block {block} must cover 0..{dim - 1} exactly once, got {sorted(seen)}"
        )


def from_pinching(shape: AlgebraShape, partition: Sequence[Sequence[Sequence[int]]]) -> KernelRep:
    """
    ピンチング (条件付き期待値): 分割の同じセルに属さない成分を 0 にする

    Args:
        shape: 形状
        partition: ブロックごとの添字集合の分割

    Returns:
        KernelRep: 冪等な核
    """
    if len(partition) != len(shape.dims):
        raise KernelError(f"{len(partition)} partitions for {len(shape.dims)} blocks")
    mask = []
    for k, (d, cells) in enumerate(zip(shape.dims, partition, strict=True)):
        _check_partition(d, cells, k)
        label = np.empty(d, dtype=int)
        for c, cell in enumerate(cells):
            label[list(cell)] = c
        mask.append((label[:, None] == label[None, :]).astype(float).ravel())
    recipe = PinchingRecipe(partition=[[list(map(int, c)) for c in cells] for cells in partition])
    return KernelRep(shape, np.diag(np.concatenate(mask)), recipe)


def full_pinching(shape: AlgebraShape) -> KernelRep:
    """Projection onto the diagonal subalgebra"""
    return from_pinching(shape, [[[i] for i in range(d)] for d in shape.dims])


def from_markov(shape: AlgebraShape, matrix: ArrayLike) -> KernelRep:
    """
    対角形状上の古典 Markov 核 (Tf)_i = Σ_j K_ij f_j

    行和 ≤ 1 (L∞ 縮小) と重み付き列条件 Σ_i w_i K_ij ≤ w_j (L1 縮小) を検証する

    Args:
        shape: 対角形状
        matrix: 非負の n×n 行列

    Returns:
        KernelRep: 核
    """
    if not shape.is_diagonal:
        raise KernelError(f"Markov kernels need a diagonal shape, got {shape}")
    k = np.asarray(matrix, dtype=float)
    n = shape.hilbert_dim
    if k.shape != (n, n):
        raise ShapeMismatchError(f"Markov matrix {k.shape}", shape)
    if not np.all(np.isfinite(k)) or np.any(k < 0):
        raise KernelError("Markov matrix must be finite and non-negative")

    rows = k.sum(axis=1)
    worst_row = int(np.argmax(rows))
    if rows[worst_row] > 1.0 + STOCHASTIC_TOL:
        raise KernelError(f"Row {worst_row} sums to {rows[worst_row]:.15g} > 1")
    w = np.asarray(shape.weights)
    excess = w @ k - w * (1.0 + STOCHASTIC_TOL)
    worst_col = int(np.argmax(excess))
    if excess[worst_col] > 0:
        raise KernelError(
            f"Weighted column {worst_col} violates Σ_i w_i K_ij ≤ w_j "
            f"(excess {excess[worst_col]:.3e})"
        )
    return KernelRep(shape, k, MarkovRecipe(matrix=k.tolist()))


def metropolis_matrix(weights: Sequence[float]) -> np.ndarray:
    """
    重み可逆な Metropolis 行列 K_ij = (1/n) min(1, w_j/w_i), 対角で行和 1 に補う

    w_i K_ij が対称なので Σ_i w_i K_ij = w_j
    """
    w = np.asarray(weights, dtype=float)
    n = w.size
    k = np.minimum(1.0, w[None, :] / w[:, None]) / n
    np.fill_diagonal(k, 0.0)
    np.fill_diagonal(k, 1.0 - k.sum(axis=1))
    return k


def from_schur(shape: AlgebraShape, m: ArrayLike) -> KernelRep:
    """
    Schur 乗数 T(x) = m ∘ x

    Args:
        shape: 単一ブロックの形状
        m: 対角成分 ≤ 1 の半正定値行列

    Returns:
        KernelRep: 完全正値な核
    """
    if len(shape.dims) != 1:
        raise KernelError(f"Schur multipliers need a single-block shape, got {shape}")
    d = shape.dims[0]
    m = np.asarray(m, dtype=np.complex128)
    if m.shape != (d, d):
        raise ShapeMismatchError(f"Schur symbol {m.shape}", shape)
    scale = max(1.0, float(np.max(np.abs(m))))
    if float(np.max(np.abs(m - m.conj().T))) > PSD_TOL * scale:
        raise KernelError("Schur symbol is not Hermitian")
    lowest = float(np.linalg.eigvalsh((m + m.conj().T) / 2)[0])
    if lowest < -PSD_TOL * scale:
        raise KernelError(f"Schur symbol is not PSD (min eigenvalue {lowest:.3e})")
    diag = np.diag(m).real
    worst = int(np.argmax(diag))
    if diag[worst] > 1.0 + STOCHASTIC_TOL:
        raise KernelError(f"Schur symbol diagonal entry {worst} is {diag[worst]:.15g} > 1")
    return KernelRep(shape, np.diag(m.ravel()), SchurRecipe(matrix=from_complex_matrix(m)))


def combine(
    kernels: Sequence[KernelRep],
    mode: CombineMode | str = CombineMode.COMPOSE,
    weights: Sequence[float] | None = None,
) -> KernelRep:
    """
    核の合成 (T1∘T2∘...) または凸結合 Σ w_i T_i

    入力がすべて認証済みなら出力も認証されることを確認する

    Args:
        kernels: 同じ形状の核
        mode: compose / convex
        weights: convex の重み

    Returns:
        KernelRep: 結合された核
    """
    mode = CombineMode(mode)
    if not kernels:
        raise KernelError("combine needs at least one kernel")
    shape = kernels[0].shape
    for t in kernels[1:]:
        if t.shape != shape:
            raise ShapeMismatchError(shape, t.shape)

    if mode is CombineMode.COMPOSE:
        if weights is not None:
            raise KernelError("compose takes no weights")
        superoperator = np.eye(shape.superdim, dtype=np.complex128)
        for t in kernels:
            superoperator = superoperator @ t.superoperator
        weight_list = None
    else:
        if weights is None or len(weights) != len(kernels):
            raise KernelError("convex combination needs one weight per kernel")
        w = _check_probabilities(weights)
        superoperator = sum(
            (wi * t.superoperator for wi, t in zip(w, kernels, strict=True)),
            np.zeros((shape.superdim, shape.superdim), dtype=np.complex128),
        )
        weight_list = w.tolist()

    recipe = None
    if all(t.recipe is not None for t in kernels):
        recipe = CombineRecipe(
            mode=mode, kernels=[t.recipe for t in kernels], weights=weight_list
        )
    result = KernelRep(shape, superoperator, recipe)

    if all(certify_DS(t).passed for t in kernels):
        certification = certify_DS(result)
        if not certification.passed:
            raise KernelError(
                f"{mode.value} of certified kernels failed certification: "
                f"{', '.join(certification.failures)}"
            )
    return result


def _adjoint_action(u: Operator) -> ComplexArray:
    """Superoperator of x ↦ u x u* for block-diagonal u"""
    size = u.shape.superdim
    out = np.zeros((size, size), dtype=np.complex128)
    offsets = u.shape.vector_offsets
    for k, block in enumerate(u.blocks):
        out[offsets[k] : offsets[k + 1], offsets[k] : offsets[k + 1]] = np.kron(block, block.conj())
    return out


def conjugate(t: KernelRep, u: Operator) -> KernelRep:
    """
    ユニタリ共役 x ↦ u T(u* x u) u*

    Args:
        t: 核
        u: ブロック対角ユニタリ

    Returns:
        KernelRep: 共役された核
    """
    if u.shape != t.shape:
        raise ShapeMismatchError(t.shape, u.shape)
    defect = (u.adjoint() @ u - Operator.identity(u.shape)).max_abs()
    if defect > UNITARY_TOL:
        raise KernelError(f"Conjugating operator is not unitary (defect {defect:.3e})")
    superoperator = _adjoint_action(u) @ t.superoperator @ _adjoint_action(u.adjoint())
    recipe = None
    if t.recipe is not None:
        recipe = ConjugatedRecipe(kernel=t.recipe, unitary=from_complex_matrix(u.to_dense()))
    return KernelRep(t.shape, superoperator, recipe)
