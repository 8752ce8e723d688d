"""
Ergodic

Cesàro 平均・平均収束の診断・d.s.a.e. 証人・収束定理の再現
"""

from .cesaro import (
    DEFAULT_SCHEDULE,
    CauchyProfile,
    Trajectory,
    cauchy_profile,
    cesaro,
    check_schedule,
    mean_limit,
)
from .replication import (
    Prop1Level,
    ReplicationReport,
    ShellRecord,
    TheoremLevel,
    artifacts_to_json,
    audit_report,
    replicate_prop1,
    replicate_theorem,
)
from .witness import ProjectionWitness, audit_witness, dsae_check, maximal_projection

__all__ = [
    "DEFAULT_SCHEDULE",
    "CauchyProfile",
    "Prop1Level",
    "ProjectionWitness",
    "ReplicationReport",
    "ShellRecord",
    "TheoremLevel",
    "Trajectory",
    "artifacts_to_json",
    "audit_report",
    "audit_witness",
    "cauchy_profile",
    "cesaro",
    "check_schedule",
    "dsae_check",
    "mean_limit",
    "maximal_projection",
    "replicate_prop1",
    "replicate_theorem",
]
