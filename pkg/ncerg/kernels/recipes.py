"""
Kernel Recipes

核の構成手順 (直列化形式と実験設定で共有する検証済みモデル)

超作用素そのものは保存せず、読み込み時に手順から再構成する
"""

from enum import Enum
from typing import Annotated, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ncerg.algebra.operator import ComplexArray

# a matrix entry is either a real number or a [re, im] pair
Entry = float | tuple[float, float]
MatrixRows = list[list[Entry]]


def to_complex_matrix(rows: MatrixRows) -> ComplexArray:
    return np.array(
        [[complex(*e) if isinstance(e, (tuple, list)) else complex(e) for e in row] for row in rows],
        dtype=np.complex128,
    )


def from_complex_matrix(matrix: ComplexArray) -> MatrixRows:
    """Real entries stay plain numbers, complex ones become [re, im]"""
    rows: MatrixRows = []
    for row in np.asarray(matrix):
        rows.append(
            [float(z.real) if z.imag == 0 else (float(z.real), float(z.imag)) for z in row]
        )
    return rows


class KernelFamily(str, Enum):
    """Families sampled by random_kernel"""

    UNITARY_MIXTURE = "unitary_mixture"
    PINCHING = "pinching"
    MARKOV = "markov"
    SCHUR = "schur"


class CombineMode(str, Enum):
    COMPOSE = "compose"
    CONVEX = "convex"


class _Recipe(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class IdentityRecipe(_Recipe):
    kind: Literal["identity"] = "identity"


class UnitaryMixtureRecipe(_Recipe):
    kind: Literal["unitary_mixture"] = "unitary_mixture"
    weights: list[float] = Field(min_length=1)
    unitaries: list[MatrixRows] = Field(min_length=1)

    @model_validator(mode="after")
    def _lengths_match(self) -> "UnitaryMixtureRecipe":
        if len(self.weights) != len(self.unitaries):
            raise ValueError("weights and unitaries must have the same length")
        return self


class PinchingRecipe(_Recipe):
    kind: Literal["pinching"] = "pinching"
    partition: list[list[list[int]]]


class MarkovRecipe(_Recipe):
    kind: Literal["markov"] = "markov"
    matrix: list[list[float]]


class SchurRecipe(_Recipe):
    kind: Literal["schur"] = "schur"
    matrix: MatrixRows


class RandomRecipe(_Recipe):
    kind: Literal["random"] = "random"
    family: KernelFamily
    seed: int = Field(ge=0)


class CombineRecipe(_Recipe):
    kind: Literal["combine"] = "combine"
    mode: CombineMode
    kernels: list["KernelRecipe"] = Field(min_length=1)
    weights: list[float] | None = None

    @model_validator(mode="after")
    def _weights_for_convex(self) -> "CombineRecipe":
        if self.mode is CombineMode.CONVEX:
            if self.weights is None or len(self.weights) != len(self.kernels):
                raise ValueError("convex combination needs one weight per kernel")
        elif self.weights is not None:
            raise ValueError("compose takes no weights")
        return self


class ConjugatedRecipe(_Recipe):
    """x ↦ u T(u* x u) u*, u given explicitly or as a block Haar seed"""

    kind: Literal["conjugated"] = "conjugated"
    kernel: "KernelRecipe"
    unitary: MatrixRows | None = None
    seed: int | None = Field(default=None, ge=0)

    @model_validator(mode="after")
    def _one_unitary_source(self) -> "ConjugatedRecipe":
        if (self.unitary is None) == (self.seed is None):
            raise ValueError("give exactly one of 'unitary' or 'seed'")
        return self


KernelRecipe = Annotated[
    IdentityRecipe
    | UnitaryMixtureRecipe
    | PinchingRecipe
    | MarkovRecipe
    | SchurRecipe
    | RandomRecipe
    | CombineRecipe
    | ConjugatedRecipe,
    Field(discriminator="kind"),
]

CombineRecipe.model_rebuild()
ConjugatedRecipe.model_rebuild()
