"""
Core Algebra

有限トレース付き行列環: ブロック構造・重み付きトレース・演算・スペクトル計算・射影束
"""

from .operator import AlgebraOp, Operator, algebra_ops, trace
from .random import (
    OperatorKind,
    derive_seeds,
    random_operator,
    random_projection,
    random_unitary,
)
from .serialization import dumps_operator, loads_operator, operator_from_json, operator_to_json
from .shape import AlgebraShape, Block
from .spectral import (
    Projection,
    SpectralDecomposition,
    eigh,
    meet_projections,
    polar_abs,
    positive_parts,
    singular_values,
    spectral_projection,
    spectral_truncate,
)

__all__ = [
    "AlgebraOp",
    "AlgebraShape",
    "Block",
    "Operator",
    "OperatorKind",
    "Projection",
    "SpectralDecomposition",
    "algebra_ops",
    "derive_seeds",
    "dumps_operator",
    "eigh",
    "loads_operator",
    "meet_projections",
    "operator_from_json",
    "operator_to_json",
    "polar_abs",
    "positive_parts",
    "random_operator",
    "random_projection",
    "random_unitary",
    "singular_values",
    "spectral_projection",
    "spectral_truncate",
    "trace",
]
