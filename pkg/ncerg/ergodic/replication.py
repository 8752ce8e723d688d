"""
Replication

平均エルゴード定理 (R0 ノルム収束) と d.s.a.e. 収束定理の証明を
明示的な予算で実行し、すべての中間量を記録する自己監査型レポート
"""

import logging
from collections.abc import Callable, Sequence
from itertools import combinations
from typing import Any, Literal

from pydantic import BaseModel, Field

from ncerg.algebra import (
    Operator,
    Projection,
    meet_projections,
    operator_to_json,
    positive_parts,
    spectral_truncate,
)
from ncerg.errors import AlgebraError, InfeasibleBudgetError
from ncerg.kernels import KernelRep, fixed_space, spectral_gap
from ncerg.rearrangement import L1, LINF, R0, mu, norm_eval

from .cesaro import DEFAULT_SCHEDULE, Trajectory, cesaro, check_schedule, require_certified
from .witness import ProjectionWitness, audit_witness, dsae_check, maximal_projection

logger = logging.getLogger(__name__)

AUDIT_TOL = 1e-9
BISECTION_MAX_STEPS = 2200
MAX_SHELLS = 64
# x12 is sized so the greedy half-budget fill yields this many shells
TARGET_SHELLS = 3
# checkpoints re-derived from scratch when auditing a trajectory
AUDIT_CHECKPOINT_LIMIT = 64

Verdict = Literal["pass", "fail", "stalled"]


class Prop1Level(BaseModel):
    """One level n of the R0 mean-convergence argument"""

    level: int
    cut: float
    x1_l1: float
    x2_linf: float
    l_n: int | None = None
    limit_l1: float | None = None
    l1_pair_max: float | None = None
    linf_pair_max: float | None = None
    pair_bound: float | None = None
    threshold: float
    pairs: int = 0
    verdict: Verdict


class ShellRecord(BaseModel):
    k: int
    l1: float
    budget: float
    defect: float
    valid: bool


class TheoremLevel(BaseModel):
    """One level n of the d.s.a.e. argument"""

    level: int
    cut: float
    x2_linf: float
    tail_level: float
    x12_l1: float
    x12_budget: float
    shells: list[ShellRecord] = []
    e1_defect: float | None = None
    en_defect: float | None = None
    l_n: int | None = None
    e2_defect: float | None = None
    defect_budget: float
    x2_part: float | None = None
    x11_part: float | None = None
    x12_part: float | None = None
    final_bound: float | None = None
    threshold: float
    pairs: int = 0
    verdict: Verdict
    failure: str | None = None


class ReplicationReport(BaseModel):
    """
    記録されたすべての値は artifacts に保存した作用素から再計算できる (audit_report)
    """

    kind: Literal["prop1", "theorem"]
    n_max: int
    tol: float
    schedule: list[int]
    levels: list[Prop1Level | TheoremLevel]
    stalled_at: int | None = None
    failure: str | None = None
    spectral_gap: float | None = None
    limit_distance: float
    limit_bound: float | None = None
    # levels whose defect budget 2^{-4n} no non-identity projection can meet
    vacuous_levels: list[int] = []
    verdict: Literal["pass", "fail"]

    artifacts: dict[str, Any] = Field(default_factory=dict, exclude=True, repr=False)


def _check_common(t: KernelRep, x: Operator, n_max: int, schedule: Sequence[int]) -> tuple[int, ...]:
    require_certified(t)
    if n_max < 1:
        raise AlgebraError(f"n_max must be >= 1, got {n_max}")
    return check_schedule(schedule)


def _first_stable_index(distances: Sequence[float], threshold: float) -> int | None:
    """Smallest i with distances[j] < threshold for every j >= i"""
    index = None
    for i in range(len(distances) - 1, -1, -1):
        if distances[i] >= threshold:
            break
        index = i
    return index


def _pair_max(
    averages: Sequence[Operator], start: int, measure: Callable[[Operator], float]
) -> tuple[float, int]:
    tail = averages[start:]
    values = [measure(a - b) for a, b in combinations(tail, 2)]
    return (max(values) if values else 0.0), len(values)


def replicate_prop1(
    t: KernelRep,
    x: Operator,
    n_max: int,
    tol: float,
    schedule: Sequence[int] = DEFAULT_SCHEDULE,
) -> ReplicationReport:
    """
    R0 ノルムでの Cesàro 平均の Cauchy 性を各レベル n で検証

    x = x1 + x2 を 2^{-n}/2 で切断し (‖x2‖∞ < 2^{-n})、
    ‖s_m x1 - x̃1‖₁ < 2^{-n}/2 が以後ずっと成り立つ最初の l(n) を探して
    l, m ≥ l(n) の全組で ‖s_l x - s_m x‖_R0 ≤ 4·2^{-n} + tol を確かめる

    Args:
        t: DS⁺ 認証済みの核
        x: 初期元
        n_max: 最大レベル
        tol: 数値誤差の許容量
        schedule: 記録する n

    Returns:
        ReplicationReport: レベルごとの記録
    """
    points = _check_common(t, x, n_max, schedule)
    fixed = fixed_space(t)
    trajectory = cesaro(t, x, points)
    limit = fixed.project(x)
    averages = trajectory.averages
    artifacts: dict[str, Any] = {"x": x, "limit": limit, "trajectory": trajectory}

    levels: list[Prop1Level | TheoremLevel] = []
    stalled_at, failure, gap = None, None, None
    for n in range(1, n_max + 1):
        cut = 2.0**-n / 2
        x1, x2 = spectral_truncate(x, cut)
        record = Prop1Level(
            level=n,
            cut=cut,
            x1_l1=norm_eval(L1, x1),
            x2_linf=norm_eval(LINF, x2),
            threshold=4 * 2.0**-n,
            verdict="stalled",
        )
        traj1 = cesaro(t, x1, points)
        limit1 = fixed.project(x1)
        distances = [norm_eval(L1, s - limit1) for s in traj1.averages]
        start = _first_stable_index(distances, cut)
        artifacts[f"n{n}.x1"], artifacts[f"n{n}.x2"] = x1, x2
        artifacts[f"n{n}.x1_limit"], artifacts[f"n{n}.x1_trajectory"] = limit1, traj1

        if start is None:
            stalled_at, gap = n, spectral_gap(t)
            failure = (
                f"level {n}: schedule exhausted before ‖s_m x1 - x̃1‖₁ < {cut:.3e} "
                f"(last {distances[-1]:.3e}, spectral gap {gap:.3e})"
            )
            logger.warning(failure)
            levels.append(record)
            break
        if start == len(points) - 1:
            stalled_at, gap = n, spectral_gap(t)
            failure = (
                f"level {n}: schedule exhausted: no pair l,m ≥ l(n) = {points[start]} "
                f"(spectral gap {gap:.3e})"
            )
            logger.warning(failure)
            levels.append(record)
            break

        x2_averages = [s - s1 for s, s1 in zip(averages, traj1.averages, strict=True)]
        pair_bound, pairs = _pair_max(averages, start, lambda z: norm_eval(R0, z))
        l1_pair_max, _ = _pair_max(traj1.averages, start, lambda z: norm_eval(L1, z))
        linf_pair_max, _ = _pair_max(x2_averages, start, lambda z: norm_eval(LINF, z))
        record = record.model_copy(
            update={
                "l_n": points[start],
                "limit_l1": max(distances[start:]),
                "l1_pair_max": l1_pair_max,
                "linf_pair_max": linf_pair_max,
                "pair_bound": pair_bound,
                "pairs": pairs,
                "verdict": "pass" if pair_bound <= record.threshold + tol else "fail",
            }
        )
        logger.info(f"Level {n}: l(n)={points[start]}, bound {pair_bound:.3e} vs {record.threshold:.3e}")
        levels.append(record)

    verdict = "pass" if stalled_at is None and all(r.verdict == "pass" for r in levels) else "fail"
    return ReplicationReport(
        kind="prop1",
        n_max=n_max,
        tol=tol,
        schedule=list(points),
        levels=levels,
        stalled_at=stalled_at,
        failure=failure,
        spectral_gap=gap,
        limit_distance=norm_eval(R0, trajectory.last - limit),
        verdict=verdict,
        artifacts=artifacts,
    )


def _bisect_level(excess_at: Callable[[float], float], target: float, hi: float) -> float:
    """Smallest level c in [0, hi] with excess_at(c) <= target, to full float resolution"""
    lo = 0.0
    if excess_at(lo) <= target:
        return lo
    for _ in range(BISECTION_MAX_STEPS):
        mid = lo + (hi - lo) / 2.0
        if mid <= lo or mid >= hi:
            break
        if excess_at(mid) <= target:
            hi = mid
        else:
            lo = mid
    return hi


def _shell_half_budget(n: int, k: int) -> float:
    return 2.0 ** (-8 * (n + k)) / 2


def _x12_budget(n: int) -> float:
    """
    Mass of x12: full half-budgets for shells 1..K-1 and half of that for shell K

    Stays below Σ_k 2^{-8(n+k)}/2 < 2^{-8n}, so every shell keeps ‖·‖₁ < 2^{-8(n+k)}
    """
    full = sum(_shell_half_budget(n, k) for k in range(1, TARGET_SHELLS))
    return full + _shell_half_budget(n, TARGET_SHELLS) / 2


def _slice_shells(x12: Operator, n: int) -> list[tuple[int, Operator]]:
    """
    x12 を上から層に切り、k 番目の層の L1 質量を 2^{-8(n+k)}/2 以下に詰める

    最後の層は残り全部なので Σ_k 層 = x12
    """
    step = mu(x12)
    total = step.integral()
    if total == 0.0:
        return []
    shells: list[tuple[int, Operator]] = []
    taken = Operator.zeros(x12.shape)
    upper, upper_excess = step.sup, 0.0
    for k in range(1, MAX_SHELLS + 1):
        half_budget = _shell_half_budget(n, k)
        if total - upper_excess <= half_budget or k == MAX_SHELLS:
            shells.append((k, x12 - taken))
            break
        lower = _bisect_level(
            lambda c, base=upper_excess: step.excess(c) - base, half_budget, upper
        )
        tall_lower, _ = spectral_truncate(x12, lower)
        tall_upper, _ = spectral_truncate(x12, upper)
        shell = tall_lower - tall_upper
        shells.append((k, shell))
        taken = taken + shell
        upper, upper_excess = lower, step.excess(lower)
    return shells


def _shell_projection(
    t: KernelRep, shell: Operator, n: int, k: int, points: tuple[int, ...]
) -> tuple[Projection, list[ProjectionWitness]]:
    """E(1,n,k): meet of the maximal projections of the four positive parts"""
    bound = 2.0 ** (-4 * (n + k)) / 4
    epsilon = 2.0 ** (-4 * (n + k)) / 8
    witnesses = []
    for part in positive_parts(shell):
        if part.max_abs() == 0.0:
            continue
        witnesses.append(maximal_projection(t, part, bound, points, epsilon))
    if not witnesses:
        return Projection.identity(shell.shape), []
    return meet_projections([w.projection for w in witnesses]), witnesses


def replicate_theorem(
    t: KernelRep,
    x: Operator,
    n_max: int,
    tol: float,
    schedule: Sequence[int] = DEFAULT_SCHEDULE,
) -> ReplicationReport:
    """
    d.s.a.e. 収束の証明を実行

    各レベル n で
      x = x1 + x2 (‖x2‖∞ < 2^{-4n}),  x1 = x11 + x12 (‖x12‖₁ < 2^{-8n}),
      x12 = Σ_k 層 (‖層_k‖₁ < 2^{-8(n+k)}),
      E(1,n) = ∧_k E(1,n,k) (各層の正部分に最大射影),
      E(n) = x11 の平均が x̃11 に一様に 2^{-n} 以内となる d.s.a.e. 証人,
      E(2,n) = ∧_{n ≤ n'} (E(1,n') ∧ E(n'))
    を作り、τ(1 - E(2,n)) < 2^{-4n} と
    ‖E(2,n)(s_l x - s_m x)E(2,n)‖∞ ≤ 8·2^{-n} + tol (l, m ≥ l(n)) を確かめる

    Args:
        t: DS⁺ 認証済みの核
        x: 初期元
        n_max: 最大レベル
        tol: 数値誤差の許容量
        schedule: 記録する n

    Returns:
        ReplicationReport: レベルごとの記録
    """
    points = _check_common(t, x, n_max, schedule)
    total_trace = x.shape.total_trace
    if total_trace <= 2.0**-4:
        raise InfeasibleBudgetError(
            "budget",
            f"τ(1) = {total_trace:.6g} does not exceed the level-1 defect budget 2^-4",
        )
    min_weight = x.shape.min_weight
    vacuous = [n for n in range(1, n_max + 1) if min_weight >= 2.0 ** (-4 * n)]
    if vacuous:
        # a non-identity projection has trace defect >= min_weight
        logger.warning(
            f"Smallest block weight {min_weight:.6g} reaches the defect budget 2^(-4n) "
            f"at levels {vacuous}: every projection there is forced to 1"
        )
    fixed = fixed_space(t)
    trajectory = cesaro(t, x, points)
    limit = fixed.project(x)
    averages = trajectory.averages
    artifacts: dict[str, Any] = {"x": x, "limit": limit, "trajectory": trajectory}

    records: dict[int, TheoremLevel] = {}
    components: dict[int, dict[str, Any]] = {}
    stalled_at, failure = None, None

    for n in range(1, n_max + 1):
        cut = 2.0 ** (-4 * n) / 2
        x1, x2 = spectral_truncate(x, cut)
        x12_budget = _x12_budget(n)
        step1 = mu(x1)
        tail_level = _bisect_level(step1.excess, x12_budget, step1.sup)
        x12, x11 = spectral_truncate(x1, tail_level)
        record = TheoremLevel(
            level=n,
            cut=cut,
            x2_linf=norm_eval(LINF, x2),
            tail_level=tail_level,
            x12_l1=norm_eval(L1, x12),
            x12_budget=x12_budget,
            defect_budget=2.0 ** (-4 * n),
            threshold=8 * 2.0**-n,
            verdict="stalled",
        )
        artifacts.update({f"n{n}.x1": x1, f"n{n}.x2": x2, f"n{n}.x11": x11, f"n{n}.x12": x12})

        shell_projections, shell_records, witnesses = [], [], []
        for k, shell in _slice_shells(x12, n):
            e_k, part_witnesses = _shell_projection(t, shell, n, k, points)
            witnesses.extend(part_witnesses)
            valid = all(w.valid for w in part_witnesses)
            shell_records.append(
                ShellRecord(
                    k=k,
                    l1=norm_eval(L1, shell),
                    budget=2.0 ** (-8 * (n + k)),
                    defect=e_k.defect,
                    valid=valid,
                )
            )
            shell_projections.append(e_k)
            artifacts[f"n{n}.shell{k}"] = shell
            if not valid:
                failure = f"E(1,{n},{k}): " + "; ".join(
                    w.failure for w in part_witnesses if w.failure
                )
        e1 = meet_projections(shell_projections) if shell_projections else Projection.identity(x.shape)
        record = record.model_copy(update={"shells": shell_records, "e1_defect": e1.defect})
        artifacts[f"n{n}.shell_witnesses"] = witnesses
        if failure is not None:
            stalled_at = n
            records[n] = record.model_copy(update={"failure": failure})
            break

        traj11 = cesaro(t, x11, points)
        limit11 = fixed.project(x11)
        en_witness, start = None, None
        for i in range(len(points)):
            witness = dsae_check(
                list(traj11.averages[i:]),
                limit11,
                epsilon=2.0 ** (-4 * n) / 2,
                bound=2.0**-n,
                indices=points[i:],
            )
            if witness.valid:
                en_witness, start = witness, i
                break
        if en_witness is None or start is None:
            stalled_at = n
            failure = f"E({n}): no scheduled l gives a d.s.a.e. witness for x11"
            records[n] = record.model_copy(update={"failure": failure})
            break
        if start == len(points) - 1:
            stalled_at = n
            failure = f"E({n}): schedule exhausted: no pair l,m ≥ l(n) = {points[start]}"
            records[n] = record.model_copy(update={"failure": failure})
            break

        record = record.model_copy(update={"en_defect": en_witness.defect, "l_n": points[start]})
        artifacts[f"n{n}.en_witness"] = en_witness
        traj1 = cesaro(t, x1, points)
        components[n] = {
            "start": start,
            "e1": e1,
            "en": en_witness.projection,
            "x1_averages": traj1.averages,
            "x11_averages": traj11.averages,
        }
        records[n] = record

    if stalled_at is not None:
        logger.warning(f"Replication stalled at level {stalled_at}: {failure}")
    completed = sorted(components)
    for n in completed:
        record = records[n]
        parts = [p for m in completed if m >= n for p in (components[m]["e1"], components[m]["en"])]
        e2 = meet_projections(parts)
        start = components[n]["start"]
        x1_avg = components[n]["x1_averages"]
        x11_avg = components[n]["x11_averages"]
        x2_avg = [s - s1 for s, s1 in zip(averages, x1_avg, strict=True)]
        x12_avg = [s1 - s11 for s1, s11 in zip(x1_avg, x11_avg, strict=True)]

        def compressed(z: Operator, e: Projection = e2) -> float:
            return norm_eval(LINF, e.compress(z))

        final_bound, pairs = _pair_max(averages, start, compressed)
        x2_part, _ = _pair_max(x2_avg, start, compressed)
        x11_part, _ = _pair_max(x11_avg, start, compressed)
        x12_part, _ = _pair_max(x12_avg, start, compressed)
        passes = e2.defect < record.defect_budget and final_bound <= record.threshold + tol
        records[n] = record.model_copy(
            update={
                "e2_defect": e2.defect,
                "x2_part": x2_part,
                "x11_part": x11_part,
                "x12_part": x12_part,
                "final_bound": final_bound,
                "pairs": pairs,
                "verdict": "pass" if passes else "fail",
            }
        )
        artifacts[f"n{n}.e2"] = e2
        logger.info(
            f"Level {n}: τ(1-E(2,n))={e2.defect:.3e}, bound {final_bound:.3e} vs {record.threshold:.3e}"
        )

    limit_bound = None
    if completed:
        last = completed[-1]
        e2 = artifacts[f"n{last}.e2"]
        tail = averages[components[last]["start"] :]
        limit_bound = max(norm_eval(LINF, e2.compress(s - limit)) for s in tail)

    levels: list[Prop1Level | TheoremLevel] = [records[n] for n in sorted(records)]
    verdict = "pass" if stalled_at is None and all(r.verdict == "pass" for r in levels) else "fail"
    return ReplicationReport(
        kind="theorem",
        n_max=n_max,
        tol=tol,
        schedule=list(points),
        levels=levels,
        stalled_at=stalled_at,
        failure=failure,
        spectral_gap=spectral_gap(t) if stalled_at is not None else None,
        limit_distance=norm_eval(R0, trajectory.last - limit),
        limit_bound=limit_bound,
        vacuous_levels=vacuous,
        verdict=verdict,
        artifacts=artifacts,
    )


def _close(recorded: float | None, fresh: float) -> bool:
    return recorded is not None and abs(recorded - fresh) <= AUDIT_TOL * max(1.0, abs(fresh))


def _audit_trajectory(trajectory: Trajectory, problems: list[str]) -> None:
    for n, average in trajectory.items():
        if n > AUDIT_CHECKPOINT_LIMIT:
            break
        if not trajectory.recompute(n).allclose(average, atol=AUDIT_TOL):
            problems.append(f"s_{n} differs from its from-scratch recomputation")


def _audit_prop1(report: ReplicationReport, problems: list[str]) -> None:
    averages = report.artifacts["trajectory"].averages
    for record in report.levels:
        assert isinstance(record, Prop1Level)
        n = record.level
        x1, x2 = report.artifacts[f"n{n}.x1"], report.artifacts[f"n{n}.x2"]
        if not _close(record.x1_l1, norm_eval(L1, x1)):
            problems.append(f"level {n}: ‖x1‖₁ mismatch")
        if not _close(record.x2_linf, norm_eval(LINF, x2)):
            problems.append(f"level {n}: ‖x2‖∞ mismatch")
        if record.l_n is None:
            continue
        start = report.schedule.index(record.l_n)
        fresh, _ = _pair_max(averages, start, lambda z: norm_eval(R0, z))
        if not _close(record.pair_bound, fresh):
            problems.append(f"level {n}: pair bound {record.pair_bound} != recomputed {fresh}")
        traj1 = report.artifacts[f"n{n}.x1_trajectory"]
        limit1 = report.artifacts[f"n{n}.x1_limit"]
        distance = max(norm_eval(L1, s - limit1) for s in traj1.averages[start:])
        if not _close(record.limit_l1, distance):
            problems.append(f"level {n}: ‖s_m x1 - x̃1‖₁ mismatch")


def _audit_theorem(report: ReplicationReport, problems: list[str]) -> None:
    averages = report.artifacts["trajectory"].averages
    for record in report.levels:
        assert isinstance(record, TheoremLevel)
        n = record.level
        if not _close(record.x2_linf, norm_eval(LINF, report.artifacts[f"n{n}.x2"])):
            problems.append(f"level {n}: ‖x2‖∞ mismatch")
        if not _close(record.x12_l1, norm_eval(L1, report.artifacts[f"n{n}.x12"])):
            problems.append(f"level {n}: ‖x12‖₁ mismatch")
        x12 = report.artifacts[f"n{n}.x12"]
        shell_sum = Operator.zeros(x12.shape)
        for shell in record.shells:
            shell_op = report.artifacts[f"n{n}.shell{shell.k}"]
            shell_sum = shell_sum + shell_op
            if not _close(shell.l1, norm_eval(L1, shell_op)):
                problems.append(f"level {n}: shell {shell.k} L1 mismatch")
        if record.shells and not shell_sum.allclose(x12, atol=AUDIT_TOL * max(1.0, x12.max_abs())):
            problems.append(f"level {n}: shells do not sum to x12")
        for witness in report.artifacts.get(f"n{n}.shell_witnesses", []):
            problems.extend(f"level {n} shell witness: {p}" for p in audit_witness(witness))
        en = report.artifacts.get(f"n{n}.en_witness")
        if en is not None:
            problems.extend(f"level {n} E(n): {p}" for p in audit_witness(en))
        e2 = report.artifacts.get(f"n{n}.e2")
        if e2 is None or record.l_n is None:
            continue
        if not _close(record.e2_defect, e2.defect):
            problems.append(f"level {n}: τ(1-E(2,n)) mismatch")
        start = report.schedule.index(record.l_n)
        fresh, _ = _pair_max(averages, start, lambda z, e=e2: norm_eval(LINF, e.compress(z)))
        if not _close(record.final_bound, fresh):
            problems.append(f"level {n}: final bound {record.final_bound} != recomputed {fresh}")


def audit_report(report: ReplicationReport) -> list[str]:
    """
    レポートの記録値を保存された作用素から再計算して照合

    Args:
        report: replicate_prop1 / replicate_theorem の結果

    Returns:
        list[str]: 食い違いの説明 (空なら一致)
    """
    problems: list[str] = []
    if not report.artifacts:
        return ["report carries no artifacts to audit"]
    trajectory = report.artifacts["trajectory"]
    _audit_trajectory(trajectory, problems)
    limit = report.artifacts["limit"]
    if not _close(report.limit_distance, norm_eval(R0, trajectory.last - limit)):
        problems.append("limit distance mismatch")
    if report.kind == "prop1":
        _audit_prop1(report, problems)
    else:
        _audit_theorem(report, problems)
    return problems


def artifacts_to_json(artifacts: dict[str, Any]) -> dict[str, Any]:
    """Operators and projections as operator JSON documents, for --dump"""

    def encode(value: Any) -> Any:
        if isinstance(value, Operator):
            return operator_to_json(value)
        if isinstance(value, Projection):
            return {"ranks": list(value.ranks), "operator": operator_to_json(value.operator)}
        if isinstance(value, Trajectory):
            return {
                "schedule": list(value.schedule),
                "averages": [operator_to_json(a) for a in value.averages],
            }
        if isinstance(value, ProjectionWitness):
            return {"witness": value.model_dump(mode="json"), "projection": encode(value.projection)}
        if isinstance(value, (list, tuple)):
            return [encode(v) for v in value]
        return value

    return {key: encode(value) for key, value in artifacts.items()}
