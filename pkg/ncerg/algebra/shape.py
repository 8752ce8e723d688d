"""
Algebra Shape

有限トレース付き行列環 (M, τ) のブロック構造を表すモジュール
"""

from collections.abc import Iterable, Sequence

from pydantic import BaseModel, ConfigDict, Field, field_validator


class Block(BaseModel):
    """Full matrix block M_d carrying trace weight w"""

    model_config = ConfigDict(frozen=True)

    dim: int = Field(ge=1)
    weight: float = Field(gt=0, allow_inf_nan=False)


class AlgebraShape(BaseModel):
    """
    直和 ⊕ M_{d_k} とトレース τ(x) = Σ w_k Tr(x_k) の形状
    """

    model_config = ConfigDict(frozen=True)

    blocks: tuple[Block, ...] = Field(min_length=1)

    @field_validator("blocks")
    @classmethod
    def _total_trace_positive(cls, blocks: tuple[Block, ...]) -> tuple[Block, ...]:
        total = sum(b.dim * b.weight for b in blocks)
        if not 0 < total < float("inf"):
            raise ValueError(f"total trace must be finite and positive, got {total}")
        return blocks

    @classmethod
    def from_pairs(cls, pairs: Iterable[Sequence[float]]) -> "AlgebraShape":
        """
        [(dim, weight), ...] から形状を作成

        Args:
            pairs: (block_dim, block_weight) の列

        Returns:
            AlgebraShape: 形状
        """
        return cls(blocks=tuple(Block(dim=int(d), weight=float(w)) for d, w in pairs))

    @classmethod
    def uniform(cls, dims: Iterable[int], weight: float = 1.0) -> "AlgebraShape":
        return cls.from_pairs((d, weight) for d in dims)

    @classmethod
    def diagonal(cls, weights: Iterable[float]) -> "AlgebraShape":
        """Commutative shape: every block is 1x1"""
        return cls.from_pairs((1, w) for w in weights)

    def to_pairs(self) -> list[list[float]]:
        return [[b.dim, b.weight] for b in self.blocks]

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(b.dim for b in self.blocks)

    @property
    def weights(self) -> tuple[float, ...]:
        return tuple(b.weight for b in self.blocks)

    @property
    def total_trace(self) -> float:
        """τ(1)"""
        return float(sum(b.dim * b.weight for b in self.blocks))

    @property
    def hilbert_dim(self) -> int:
        """Dimension N of the Hilbert space the algebra acts on"""
        return sum(self.dims)

    @property
    def superdim(self) -> int:
        """Dimension D = Σ d_k² of the algebra as a vector space"""
        return sum(d * d for d in self.dims)

    @property
    def hilbert_offsets(self) -> tuple[int, ...]:
        offsets = [0]
        for d in self.dims:
            offsets.append(offsets[-1] + d)
        return tuple(offsets)

    @property
    def vector_offsets(self) -> tuple[int, ...]:
        """Start index of each block in the row-major vectorization"""
        offsets = [0]
        for d in self.dims:
            offsets.append(offsets[-1] + d * d)
        return tuple(offsets)

    @property
    def is_diagonal(self) -> bool:
        return all(d == 1 for d in self.dims)

    @property
    def min_weight(self) -> float:
        return min(self.weights)

    def __str__(self) -> str:
        inner = ", ".join(f"({b.dim}, {b.weight:g})" for b in self.blocks)
        return f"[{inner}]"
