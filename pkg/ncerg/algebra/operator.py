"""
Operator

行列環の元 (ブロックごとの複素行列) と基本演算を提供するモジュール
"""

import logging
from collections.abc import Sequence
from enum import Enum

import numpy as np
from numpy.typing import ArrayLike, NDArray

from ncerg.errors import AlgebraError, ShapeMismatchError

from .shape import AlgebraShape

logger = logging.getLogger(__name__)

ComplexArray = NDArray[np.complex128]


def _frozen(array: ArrayLike) -> ComplexArray:
    out = np.array(array, dtype=np.complex128, copy=True)
    out.setflags(write=False)
    return out


class Operator:
    """
    (M, τ) の元

    有限次元では L0 = M なので L1, L∞, R0 の所属はノルムで表現する
    """

    __slots__ = ("shape", "blocks")

    def __init__(self, shape: AlgebraShape, blocks: Sequence[ArrayLike]):
        """
        Initialize Operator

        Args:
            shape: 代数の形状
            blocks: ブロックごとの正方行列
        """
        if len(blocks) != len(shape.blocks):
            raise ShapeMismatchError(
                f"{len(blocks)} blocks", f"{shape} ({len(shape.blocks)} blocks)"
            )
        frozen = []
        for k, (block, dim) in enumerate(zip(blocks, shape.dims, strict=True)):
            arr = _frozen(block)
            if arr.shape != (dim, dim):
                raise ShapeMismatchError(f"block {k} of shape {arr.shape}", shape)
            if not np.all(np.isfinite(arr)):
                raise AlgebraError(f"Block {k} contains non-finite entries")
            frozen.append(arr)
        self.shape = shape
        self.blocks: tuple[ComplexArray, ...] = tuple(frozen)

    # --- constructors -------------------------------------------------------

    @classmethod
    def zeros(cls, shape: AlgebraShape) -> "Operator":
        return cls(shape, [np.zeros((d, d)) for d in shape.dims])

    @classmethod
    def identity(cls, shape: AlgebraShape) -> "Operator":
        return cls(shape, [np.eye(d) for d in shape.dims])

    @classmethod
    def from_diagonal(cls, shape: AlgebraShape, values: ArrayLike) -> "Operator":
        """
        対角成分 (Hilbert 空間の基底順) から作成

        Args:
            shape: 形状
            values: 長さ N の対角成分

        Returns:
            Operator: 対角作用素
        """
        values = np.asarray(values, dtype=np.complex128).ravel()
        if values.size != shape.hilbert_dim:
            raise ShapeMismatchError(f"{values.size} diagonal entries", shape)
        offsets = shape.hilbert_offsets
        return cls(
            shape,
            [np.diag(values[offsets[k] : offsets[k + 1]]) for k in range(len(shape.dims))],
        )

    @classmethod
    def from_dense(cls, shape: AlgebraShape, matrix: ArrayLike) -> "Operator":
        """Take the diagonal blocks of an N x N matrix"""
        matrix = np.asarray(matrix, dtype=np.complex128)
        n = shape.hilbert_dim
        if matrix.shape != (n, n):
            raise ShapeMismatchError(f"dense matrix {matrix.shape}", shape)
        offsets = shape.hilbert_offsets
        return cls(
            shape,
            [
                matrix[offsets[k] : offsets[k + 1], offsets[k] : offsets[k + 1]]
                for k in range(len(shape.dims))
            ],
        )

    @classmethod
    def from_vector(cls, shape: AlgebraShape, vector: ArrayLike) -> "Operator":
        """
        行ベクトル化の逆写像

        基底順序: ブロック順、ブロック内は行優先 (i * d + j)
        """
        vector = np.asarray(vector, dtype=np.complex128).ravel()
        if vector.size != shape.superdim:
            raise ShapeMismatchError(f"vector of length {vector.size}", shape)
        offsets = shape.vector_offsets
        return cls(
            shape,
            [
                vector[offsets[k] : offsets[k + 1]].reshape(d, d)
                for k, d in enumerate(shape.dims)
            ],
        )

    # --- conversions --------------------------------------------------------

    def to_vector(self) -> ComplexArray:
        return np.concatenate([b.reshape(-1) for b in self.blocks])

    def to_dense(self) -> ComplexArray:
        n = self.shape.hilbert_dim
        out = np.zeros((n, n), dtype=np.complex128)
        offsets = self.shape.hilbert_offsets
        for k, block in enumerate(self.blocks):
            out[offsets[k] : offsets[k + 1], offsets[k] : offsets[k + 1]] = block
        return out

    def diagonal(self) -> ComplexArray:
        return np.concatenate([np.diag(b) for b in self.blocks])

    # --- arithmetic ---------------------------------------------------------

    def _check_same_shape(self, other: "Operator") -> None:
        if self.shape != other.shape:
            raise ShapeMismatchError(self.shape, other.shape)

    def __add__(self, other: "Operator") -> "Operator":
        self._check_same_shape(other)
        return Operator(self.shape, [a + b for a, b in zip(self.blocks, other.blocks, strict=True)])

    def __sub__(self, other: "Operator") -> "Operator":
        self._check_same_shape(other)
        return Operator(self.shape, [a - b for a, b in zip(self.blocks, other.blocks, strict=True)])

    def __neg__(self) -> "Operator":
        return Operator(self.shape, [-a for a in self.blocks])

    def __matmul__(self, other: "Operator") -> "Operator":
        self._check_same_shape(other)
        return Operator(self.shape, [a @ b for a, b in zip(self.blocks, other.blocks, strict=True)])

    def scale(self, c: complex) -> "Operator":
        return Operator(self.shape, [c * a for a in self.blocks])

    def adjoint(self) -> "Operator":
        return Operator(self.shape, [a.conj().T for a in self.blocks])

    # --- predicates ---------------------------------------------------------

    def hermitian_residual(self) -> float:
        return max(float(np.max(np.abs(a - a.conj().T), initial=0.0)) for a in self.blocks)

    def max_abs(self) -> float:
        return max(float(np.max(np.abs(a), initial=0.0)) for a in self.blocks)

    def is_hermitian(self, tol: float = 1e-10) -> bool:
        return self.hermitian_residual() <= tol * max(1.0, self.max_abs())

    def allclose(self, other: "Operator", atol: float = 1e-10, rtol: float = 0.0) -> bool:
        if self.shape != other.shape:
            return False
        return all(
            np.allclose(a, b, atol=atol, rtol=rtol)
            for a, b in zip(self.blocks, other.blocks, strict=True)
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Operator):
            return NotImplemented
        return self.shape == other.shape and all(
            np.array_equal(a, b) for a, b in zip(self.blocks, other.blocks, strict=True)
        )

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return f"Operator(shape={self.shape}, max_abs={self.max_abs():.3g})"


class AlgebraOp(str, Enum):
    """Operations accepted by algebra_ops"""

    ADD = "add"
    SUB = "sub"
    MUL = "mul"
    ADJOINT = "adjoint"
    SCALE = "scale"


def algebra_ops(
    x: Operator,
    y: Operator | None = None,
    op: AlgebraOp | str = AlgebraOp.ADD,
    c: complex = 1.0,
) -> Operator:
    """
    ブロックごとの行列演算

    Args:
        x: 第一オペランド
        y: 第二オペランド (二項演算のみ)
        op: 演算の種類
        c: scale の係数

    Returns:
        Operator: 演算結果
    """
    op = AlgebraOp(op)
    if op is AlgebraOp.ADJOINT:
        return x.adjoint()
    if op is AlgebraOp.SCALE:
        return x.scale(c)
    if y is None:
        raise AlgebraError(f"Operation {op.value} needs two operands")
    if op is AlgebraOp.ADD:
        return x + y
    if op is AlgebraOp.SUB:
        return x - y
    return x @ y


def trace(x: Operator) -> complex:
    """τ(x) = Σ_k w_k Tr(x_k)"""
    return complex(
        sum(w * np.trace(b) for w, b in zip(x.shape.weights, x.blocks, strict=True))
    )
