"""
Kernel Representation

正の Dunford–Schwartz 核 T を行ベクトル化基底上の D×D 行列として保持するモジュール

基底順序は Operator.to_vector と同じ (ブロック順、ブロック内は行優先)
"""

import logging
from typing import TYPE_CHECKING

import numpy as np
from numpy.typing import ArrayLike, NDArray

from ncerg.algebra import AlgebraShape, Operator
from ncerg.algebra.operator import ComplexArray
from ncerg.errors import KernelError, ShapeMismatchError

if TYPE_CHECKING:
    from .recipes import KernelRecipe

logger = logging.getLogger(__name__)


def dense_indices(shape: AlgebraShape) -> NDArray[np.intp]:
    """Position of each vectorized block entry inside the row-major N x N dense matrix"""
    n = shape.hilbert_dim
    indices = []
    for offset, d in zip(shape.hilbert_offsets, shape.dims, strict=False):
        rows, cols = np.meshgrid(np.arange(d), np.arange(d), indexing="ij")
        indices.append(((offset + rows) * n + offset + cols).ravel())
    return np.concatenate(indices)


def weight_vector(shape: AlgebraShape) -> NDArray[np.float64]:
    """Diagonal of the τ-Gram matrix W: each block weight repeated d_k² times"""
    return np.concatenate([np.full(d * d, w) for d, w in zip(shape.dims, shape.weights, strict=True)])


class KernelRep:
    """
    超作用素としての核

    vec(T(x)) = superoperator @ vec(x)
    """

    __slots__ = ("shape", "superoperator", "recipe")

    def __init__(
        self,
        shape: AlgebraShape,
        superoperator: ArrayLike,
        recipe: "KernelRecipe | None" = None,
    ):
        """
        Initialize KernelRep

        Args:
            shape: 代数の形状
            superoperator: D×D 行列 (D = Σ d_k²)
            recipe: 構成手順 (直列化に使う)
        """
        matrix = np.array(superoperator, dtype=np.complex128, copy=True)
        size = shape.superdim
        if matrix.shape != (size, size):
            raise ShapeMismatchError(f"superoperator {matrix.shape}", shape)
        if not np.all(np.isfinite(matrix)):
            raise KernelError("Superoperator contains non-finite entries")
        matrix.setflags(write=False)
        self.shape = shape
        self.superoperator: ComplexArray = matrix
        self.recipe = recipe

    @classmethod
    def identity(cls, shape: AlgebraShape) -> "KernelRep":
        from .recipes import IdentityRecipe

        return cls(shape, np.eye(shape.superdim), IdentityRecipe())

    @property
    def dim(self) -> int:
        return self.shape.superdim

    def apply(self, x: Operator) -> Operator:
        if x.shape != self.shape:
            raise ShapeMismatchError(self.shape, x.shape)
        return Operator.from_vector(self.shape, self.superoperator @ x.to_vector())

    def __call__(self, x: Operator) -> Operator:
        return self.apply(x)

    def adjoint_superoperator(self) -> ComplexArray:
        """
        トレース双対 T† の行列 W⁻¹ S^H W

        τ(T(x)·y*) = τ(x·T†(y)*) を満たす
        """
        w = weight_vector(self.shape)
        return (self.superoperator.conj().T * w) / w[:, None]

    def trace_adjoint(self) -> "KernelRep":
        return KernelRep(self.shape, self.adjoint_superoperator())

    def weighted_superoperator(self) -> ComplexArray:
        """W^{1/2} S W^{-1/2}, the matrix of T in a τ-orthonormal basis"""
        root = np.sqrt(weight_vector(self.shape))
        return (self.superoperator * root[:, None]) / root

    def l2_opnorm(self) -> float:
        return float(np.linalg.norm(self.weighted_superoperator(), 2))

    def allclose(self, other: "KernelRep", atol: float = 1e-10) -> bool:
        return self.shape == other.shape and bool(
            np.allclose(self.superoperator, other.superoperator, rtol=0.0, atol=atol)
        )

    def __repr__(self) -> str:
        kind = self.recipe.kind if self.recipe is not None else "raw"
        return f"KernelRep(shape={self.shape}, recipe={kind})"


def apply(t: KernelRep, x: Operator) -> Operator:
    """
    核の作用 T(x)

    Args:
        t: 核
        x: 作用素

    Returns:
        Operator: T(x)
    """
    return t.apply(x)
