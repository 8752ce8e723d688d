"""
Kernels

正の Dunford–Schwartz 核 (DS⁺) の構成・表現・認証・固定空間
"""

from .builder import (
    build_kernel,
    dumps_kernel,
    kernel_from_json,
    kernel_to_json,
    loads_kernel,
    parse_recipe,
    random_kernel,
)
from .certify import Certification, certify_DS, choi_blocks
from .constructors import (
    combine,
    conjugate,
    cyclic_shift,
    from_markov,
    from_pinching,
    from_schur,
    from_unitary_mixture,
    full_pinching,
    metropolis_matrix,
)
from .contraction import ContractionReport, NormContraction, contraction_check
from .fixed import FixedSpace, fixed_space, peripheral_spectrum, spectral_gap
from .kernel import KernelRep, apply
from .recipes import CombineMode, KernelFamily, KernelRecipe

__all__ = [
    "Certification",
    "CombineMode",
    "ContractionReport",
    "FixedSpace",
    "KernelFamily",
    "KernelRecipe",
    "KernelRep",
    "NormContraction",
    "apply",
    "build_kernel",
    "certify_DS",
    "choi_blocks",
    "combine",
    "conjugate",
    "contraction_check",
    "cyclic_shift",
    "dumps_kernel",
    "fixed_space",
    "from_markov",
    "from_pinching",
    "from_schur",
    "from_unitary_mixture",
    "full_pinching",
    "kernel_from_json",
    "kernel_to_json",
    "loads_kernel",
    "metropolis_matrix",
    "parse_recipe",
    "peripheral_spectrum",
    "random_kernel",
    "spectral_gap",
]
