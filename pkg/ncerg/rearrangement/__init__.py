"""
Rearrangement

一般化特異値関数と対称空間のノルム (L1, L∞, L1∩L∞, L1+L∞, Orlicz)
"""

from .norms import (
    L1,
    L1_CAP_LINF,
    LINF,
    R0,
    NormId,
    NormKind,
    k_decomposition,
    k_functional_by_search,
    norm_eval,
    orlicz_norm,
    step_norm,
)
from .orlicz import Delta2Report, GrowthRegime, OrliczFunction, delta2_check, luxemburg_norm
from .probes import (
    AxiomResult,
    EmbeddingReport,
    MajorizationReport,
    NormAxiomReport,
    embedding_probe,
    majorization_check,
    norm_axiom_suite,
)
from .step import StepFunction, mu

__all__ = [
    "L1",
    "L1_CAP_LINF",
    "LINF",
    "R0",
    "AxiomResult",
    "Delta2Report",
    "EmbeddingReport",
    "GrowthRegime",
    "MajorizationReport",
    "NormAxiomReport",
    "NormId",
    "NormKind",
    "OrliczFunction",
    "StepFunction",
    "delta2_check",
    "embedding_probe",
    "k_decomposition",
    "k_functional_by_search",
    "luxemburg_norm",
    "majorization_check",
    "mu",
    "norm_axiom_suite",
    "norm_eval",
    "orlicz_norm",
    "step_norm",
]
