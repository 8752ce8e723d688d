"""
Kernel Builder

構成手順からの核の組み立て・乱数による DS⁺ 核の生成・JSON 直列化
"""

import json
import logging
from typing import Any

import numpy as np
from pydantic import TypeAdapter, ValidationError

from ncerg.algebra import AlgebraShape, derive_seeds, random_unitary
from ncerg.algebra.operator import Operator
from ncerg.errors import KernelError

from .constructors import (
    combine,
    conjugate,
    from_markov,
    from_pinching,
    from_schur,
    from_unitary_mixture,
)
from .kernel import KernelRep
from .recipes import (
    CombineRecipe,
    ConjugatedRecipe,
    IdentityRecipe,
    KernelFamily,
    KernelRecipe,
    MarkovRecipe,
    PinchingRecipe,
    RandomRecipe,
    SchurRecipe,
    UnitaryMixtureRecipe,
    to_complex_matrix,
)

logger = logging.getLogger(__name__)

MIXTURE_COMPONENTS = 3

recipe_adapter: TypeAdapter[KernelRecipe] = TypeAdapter(KernelRecipe)


def _random_partition(rng: np.random.Generator, d: int) -> list[list[int]]:
    labels = rng.integers(0, d, size=d)
    return [np.flatnonzero(labels == c).tolist() for c in np.unique(labels)]


def _random_markov(rng: np.random.Generator, weights: np.ndarray) -> np.ndarray:
    """
    対称な提案行列 Q による Metropolis 型の行列

    w_i K_ij = Q_ij min(w_i, w_j) が対称なので重み付き列条件は等号で成立
    """
    n = weights.size
    a = rng.random((n, n))
    q = (a + a.T) / 2
    np.fill_diagonal(q, 0.0)
    q /= max(1.0, float(q.sum(axis=1).max()))
    k = q * np.minimum(1.0, weights[None, :] / weights[:, None])
    np.fill_diagonal(k, 1.0 - k.sum(axis=1))
    return k


def _random_schur_symbol(rng: np.random.Generator, d: int) -> np.ndarray:
    """Gram matrix of random unit vectors: PSD with unit diagonal"""
    v = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return v @ v.conj().T


def random_kernel(shape: AlgebraShape, family: KernelFamily | str, seed: int) -> KernelRep:
    """
    族ごとの乱数 DS⁺ 核 ((shape, family, seed) に対して決定的)

    Args:
        shape: 形状 (markov は対角、schur は単一ブロックが必要)
        family: 核の族
        seed: 乱数シード

    Returns:
        KernelRep: 手順 RandomRecipe を持つ核
    """
    family = KernelFamily(family)
    rng = np.random.default_rng(seed)
    if family is KernelFamily.UNITARY_MIXTURE:
        weights = rng.dirichlet(np.ones(MIXTURE_COMPONENTS))
        weights[-1] = 1.0 - weights[:-1].sum()
        unitaries = [random_unitary(shape, s) for s in derive_seeds(seed, MIXTURE_COMPONENTS)]
        kernel = from_unitary_mixture(shape, weights.tolist(), unitaries)
    elif family is KernelFamily.PINCHING:
        kernel = from_pinching(shape, [_random_partition(rng, d) for d in shape.dims])
    elif family is KernelFamily.MARKOV:
        if not shape.is_diagonal:
            raise KernelError(f"Markov kernels need a diagonal shape, got {shape}")
        kernel = from_markov(shape, _random_markov(rng, np.asarray(shape.weights)))
    else:
        if len(shape.dims) != 1:
            raise KernelError(f"Schur multipliers need a single-block shape, got {shape}")
        kernel = from_schur(shape, _random_schur_symbol(rng, shape.dims[0]))
    return KernelRep(shape, kernel.superoperator, RandomRecipe(family=family, seed=seed))


def build_kernel(shape: AlgebraShape, recipe: KernelRecipe) -> KernelRep:
    """
    手順から核を再構成

    Args:
        shape: 形状
        recipe: 構成手順

    Returns:
        KernelRep: 核
    """
    match recipe:
        case IdentityRecipe():
            return KernelRep.identity(shape)
        case UnitaryMixtureRecipe(weights=weights, unitaries=unitaries):
            return from_unitary_mixture(shape, weights, [to_complex_matrix(u) for u in unitaries])
        case PinchingRecipe(partition=partition):
            return from_pinching(shape, partition)
        case MarkovRecipe(matrix=matrix):
            return from_markov(shape, matrix)
        case SchurRecipe(matrix=matrix):
            return from_schur(shape, to_complex_matrix(matrix))
        case RandomRecipe(family=family, seed=seed):
            return random_kernel(shape, family, seed)
        case CombineRecipe(mode=mode, kernels=kernels, weights=weights):
            return combine([build_kernel(shape, r) for r in kernels], mode, weights)
        case ConjugatedRecipe(kernel=inner, unitary=unitary, seed=seed):
            if unitary is not None:
                u = Operator.from_dense(shape, to_complex_matrix(unitary))
            else:
                assert seed is not None
                u = random_unitary(shape, seed)
            conjugated = conjugate(build_kernel(shape, inner), u)
            return KernelRep(shape, conjugated.superoperator, recipe)
    raise KernelError(f"Unknown kernel recipe {recipe!r}")


def parse_recipe(document: dict[str, Any]) -> KernelRecipe:
    try:
        return recipe_adapter.validate_python(document)
    except ValidationError as e:
        raise KernelError(f"Invalid kernel recipe: {e}") from e


def kernel_to_json(t: KernelRep) -> dict[str, Any]:
    """{shape, recipe}; the superoperator itself is never written"""
    if t.recipe is None:
        raise KernelError("Only kernels built from a recipe can be serialized")
    return {"shape": t.shape.to_pairs(), "recipe": recipe_adapter.dump_python(t.recipe, mode="json")}


def kernel_from_json(document: dict[str, Any]) -> KernelRep:
    if not isinstance(document, dict) or set(document) != {"shape", "recipe"}:
        raise KernelError("Kernel document must have exactly the keys 'shape' and 'recipe'")
    shape = AlgebraShape.from_pairs(document["shape"])
    return build_kernel(shape, parse_recipe(document["recipe"]))


def dumps_kernel(t: KernelRep) -> str:
    return json.dumps(kernel_to_json(t))


def loads_kernel(text: str) -> KernelRep:
    return kernel_from_json(json.loads(text))
