"""
Experiment Runner

設定から核と初期元を組み立て、サブコマンドごとの計算を ResultRow の列にする

試行は並列に実行できるが、結果は試行番号順に並べるので出力は実行順に依存しない
"""

import logging
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, TypeVar

from ncerg.algebra import (
    Operator,
    derive_seeds,
    operator_to_json,
    polar_abs,
    random_operator,
)
from ncerg.ergodic import (
    ReplicationReport,
    artifacts_to_json,
    audit_report,
    audit_witness,
    cauchy_profile,
    cesaro,
    dsae_check,
    maximal_projection,
    mean_limit,
    replicate_prop1,
    replicate_theorem,
)
from ncerg.ergodic.witness import ProjectionWitness
from ncerg.errors import InfeasibleBudgetError
from ncerg.kernels import (
    build_kernel,
    certify_DS,
    contraction_check,
    fixed_space,
    kernel_to_json,
    peripheral_spectrum,
    spectral_gap,
)
from ncerg.kernels.certify import CHOI_TOL, DEFECT_TOL
from ncerg.rearrangement import (
    GrowthRegime,
    NormKind,
    delta2_check,
    embedding_probe,
    k_functional_by_search,
    mu,
    norm_axiom_suite,
    norm_eval,
)

from .config import ExperimentConfig
from .emit import ResultRow, Verdict, dump_artifact

logger = logging.getLogger(__name__)

K_FUNCTIONAL_RTOL = 1e-8
RATIO_RTOL = 1e-9
PERIPHERAL_TOL = 1e-9

T = TypeVar("T")


class Command(str, Enum):
    CERTIFY = "certify"
    NORMS = "norms"
    CESARO = "cesaro"
    DSAE = "dsae"
    PROP1 = "prop1"
    THEOREM = "theorem"
    EMBED = "embed"


def _verdict(ok: bool) -> Verdict:
    return "pass" if ok else "fail"


@dataclass
class RowSink:
    """Rows of one experiment/command, appended in a fixed order"""

    experiment: str
    command: str
    prefix: str = ""
    rows: list[ResultRow] = field(default_factory=list)

    def add(self, level: int, metric: str, value: float, verdict: Verdict = "n/a") -> None:
        self.rows.append(
            ResultRow(
                experiment=self.experiment,
                command=self.command,
                level=level,
                metric=f"{self.prefix}{metric}",
                value=float(value),
                verdict=verdict,
            )
        )

    def flag(self, level: int, metric: str, ok: bool) -> None:
        self.add(level, metric, 1.0 if ok else 0.0, _verdict(ok))


@dataclass(frozen=True)
class Trial:
    """One independent repetition: its index, seeds and initial element"""

    index: int
    seed: int
    probe_seed: int
    x: Operator


class ExperimentRunner:
    """
    実験ランナー

    同じ設定からは同じ行の列を返す
    """

    def __init__(self, config: ExperimentConfig, dump_dir: Path | None = None):
        """
        Initialize ExperimentRunner

        Args:
            config: 検証済みの実験設定
            dump_dir: 中間生成物の出力先 (--dump)
        """
        self.config = config
        self.dump_dir = dump_dir
        self.shape = config.algebra_shape
        self.kernel = build_kernel(self.shape, config.kernel)
        self.trials = self._make_trials()

    def _make_trials(self) -> list[Trial]:
        config = self.config
        explicit = config.element.explicit
        trials = []
        for index, trial_seed in enumerate(derive_seeds(config.seed, config.trials)):
            element_seed, probe_seed = derive_seeds(trial_seed, 2)
            if explicit is not None:
                x = explicit
            else:
                seed = config.element.seed if config.element.seed is not None else element_seed
                x = random_operator(
                    self.shape,
                    config.element.operator_kind,
                    seed,
                    rank_budget=config.element.rank,
                )
            trials.append(Trial(index, trial_seed, probe_seed, x))
        return trials

    def _sink(self, command: Command, trial: Trial | None = None) -> RowSink:
        prefix = f"trial{trial.index}." if trial is not None and self.config.trials > 1 else ""
        return RowSink(self.config.experiment, command.value, prefix)

    def _map(self, task: Callable[[Trial], T]) -> list[T]:
        """Run task on every trial; results come back in trial order"""
        if self.config.workers == 1 or len(self.trials) == 1:
            return [task(trial) for trial in self.trials]
        with ThreadPoolExecutor(max_workers=self.config.workers) as executor:
            return list(executor.map(task, self.trials))

    def _dump(self, name: str, document: dict[str, Any]) -> None:
        if self.dump_dir is not None:
            dump_artifact(self.dump_dir, f"{self.config.experiment}.{name}", document)

    def run(self, command: Command | str) -> list[ResultRow]:
        """
        サブコマンドを実行

        Args:
            command: certify / norms / cesaro / dsae / prop1 / theorem / embed

        Returns:
            list[ResultRow]: 試行番号・レベル順の結果行
        """
        command = Command(command)
        handlers: dict[Command, Callable[[], list[ResultRow]]] = {
            Command.CERTIFY: self._run_certify,
            Command.NORMS: self._run_norms,
            Command.CESARO: lambda: self._per_trial(Command.CESARO, self._cesaro_trial),
            Command.DSAE: lambda: self._per_trial(Command.DSAE, self._dsae_trial),
            Command.PROP1: lambda: self._per_trial(Command.PROP1, self._prop1_trial),
            Command.THEOREM: lambda: self._per_trial(Command.THEOREM, self._theorem_trial),
            Command.EMBED: self._run_embed,
        }
        logger.info(
            f"Running '{command.value}' for experiment '{self.config.experiment}' "
            f"({self.config.trials} trial(s), {self.config.workers} worker(s))"
        )
        rows = handlers[command]()
        failed = sum(1 for row in rows if row.verdict == "fail")
        logger.info(f"'{command.value}' produced {len(rows)} rows, {failed} failing")
        return rows

    def _per_trial(
        self, command: Command, task: Callable[[RowSink, Trial], None]
    ) -> list[ResultRow]:
        def run_trial(trial: Trial) -> list[ResultRow]:
            sink = self._sink(command, trial)
            task(sink, trial)
            return sink.rows

        return [row for rows in self._map(run_trial) for row in rows]

    # certify

    def _run_certify(self) -> list[ResultRow]:
        sink = self._sink(Command.CERTIFY)
        certification = certify_DS(self.kernel)
        choi, unital, subtrace = (
            certification.choi_min_eig,
            certification.unital_defect,
            certification.subtrace_defect,
        )
        sink.add(0, "choi_min_eig", choi, _verdict(choi >= -CHOI_TOL))
        sink.add(0, "unital_defect", unital, _verdict(unital <= DEFECT_TOL))
        sink.add(0, "subtrace_defect", subtrace, _verdict(subtrace <= DEFECT_TOL))
        sink.add(0, "l2_opnorm", certification.l2_opnorm)
        sink.flag(0, "certified", certification.passed)
        if certification.passed:
            sink.add(0, "fixed_space_dim", fixed_space(self.kernel).dim)
            sink.add(0, "spectral_gap", spectral_gap(self.kernel))
            sink.add(0, "peripheral_count", len(peripheral_spectrum(self.kernel)))
        document: dict[str, Any] = {"certification": certification.model_dump(mode="json")}
        if self.kernel.recipe is not None:
            document["kernel"] = kernel_to_json(self.kernel)
        self._dump("certify", document)
        return sink.rows

    # norms

    def _run_norms(self) -> list[ResultRow]:
        sink = self._sink(Command.NORMS)
        norms = self.config.norm_ids
        for trial in self.trials:
            trial_sink = self._sink(Command.NORMS, trial)
            for n in norms:
                trial_sink.add(0, f"{n.label}.value", norm_eval(n, trial.x))
            exact = mu(trial.x).integral(1.0)
            searched = k_functional_by_search(trial.x)
            gap = abs(exact - searched)
            trial_sink.add(0, "k_functional.gap", gap, _verdict(gap <= K_FUNCTIONAL_RTOL * max(1.0, exact)))
            sink.rows.extend(trial_sink.rows)

        seed = self.trials[0].probe_seed
        for n in norms:
            suite = norm_axiom_suite(n, self.shape, seed, self.config.trials)
            for axiom in suite.axioms:
                sink.add(0, f"{n.label}.{axiom.axiom}", axiom.worst_violation, _verdict(axiom.passes))
            if n.kind is NormKind.ORLICZ and n.psi is not None:
                for regime in GrowthRegime:
                    sink.flag(0, f"{n.label}.delta2.{regime.value}", delta2_check(n.psi, regime).passes)

        contraction = contraction_check(self.kernel, [t.x for t in self.trials], norms)
        for result in contraction.norms:
            sink.add(0, f"{result.norm}.contraction_ratio", result.worst_ratio, _verdict(result.passes))
        sink.add(0, "submajorization.margin", contraction.worst_margin, _verdict(contraction.submajorized))
        return sink.rows

    # cesaro

    def _cesaro_trial(self, sink: RowSink, trial: Trial) -> None:
        schedule = self.config.schedule
        trajectory = cesaro(self.kernel, trial.x, schedule)
        limit = mean_limit(self.kernel, trial.x)
        peripheral = peripheral_spectrum(self.kernel)
        trivial = all(abs(z - 1.0) <= PERIPHERAL_TOL for z in peripheral)
        sink.flag(0, "peripheral_trivial", trivial)
        sink.add(0, "spectral_gap", spectral_gap(self.kernel))
        for n in self.config.norm_ids:
            if len(schedule) < 2:
                distance = norm_eval(n, trajectory.last - limit)
                sink.add(schedule[-1], f"{n.label}.to_limit", distance)
                continue
            profile = cauchy_profile(trajectory, n, limit)
            for (k, distance), (_, envelope) in zip(profile.to_limit, profile.envelope, strict=True):
                sink.add(k, f"{n.label}.to_limit", distance)
                sink.add(k, f"{n.label}.envelope", envelope)
            initial = profile.to_limit[0][1]
            sink.add(
                schedule[-1],
                f"{n.label}.final_distance",
                profile.final_distance,
                _verdict(profile.final_distance <= initial * (1.0 + RATIO_RTOL) + RATIO_RTOL),
            )
            sink.flag(schedule[-1], f"{n.label}.envelope_non_increasing", profile.envelope_non_increasing())

    # dsae

    def _witness_rows(self, sink: RowSink, name: str, witness: ProjectionWitness) -> None:
        sink.add(0, f"{name}.defect", witness.defect, _verdict(witness.defect < witness.budget))
        sink.add(0, f"{name}.achieved_bound", witness.achieved_bound, _verdict(witness.achieved_bound <= witness.bound))
        for index, value in zip(witness.indices, witness.uniform_norms, strict=True):
            sink.add(index, f"{name}.uniform_norm", value)
        problems = audit_witness(witness)
        sink.add(0, f"{name}.audit_problems", len(problems), _verdict(not problems))
        for problem in problems:
            logger.warning(f"{name} audit: {problem}")

    def _dsae_trial(self, sink: RowSink, trial: Trial) -> None:
        budgets = self.config.budgets
        trajectory = cesaro(self.kernel, trial.x, self.config.schedule)
        limit = mean_limit(self.kernel, trial.x)
        schedule = list(trajectory.schedule)
        witness, start = None, None
        for i in range(len(schedule)):
            candidate = dsae_check(
                list(trajectory.averages[i:]), limit, budgets.epsilon, budgets.bound, schedule[i:]
            )
            if candidate.valid:
                witness, start = candidate, i
                break
            witness = candidate
        assert witness is not None
        sink.flag(0, "witness_found", start is not None)
        if start is not None:
            sink.add(0, "start", schedule[start])
        self._witness_rows(sink, "dsae", witness)

        magnitude, _ = polar_abs(trial.x)
        maximal = maximal_projection(
            self.kernel, magnitude, budgets.bound, schedule, budgets.epsilon
        )
        sink.add(0, "maximal.defect", maximal.defect)
        assert maximal.estimate is not None
        sink.add(
            0,
            "maximal.estimate",
            maximal.estimate,
            _verdict(maximal.defect <= maximal.estimate * (1.0 + RATIO_RTOL)),
        )
        sink.add(0, "maximal.achieved_bound", maximal.achieved_bound, _verdict(maximal.achieved_bound <= maximal.bound))
        problems = audit_witness(maximal)
        sink.add(0, "maximal.audit_problems", len(problems), _verdict(not problems))

        self._dump(
            f"dsae.trial{trial.index}",
            {
                "x": operator_to_json(trial.x),
                "limit": operator_to_json(limit),
                "dsae": artifacts_to_json({"witness": witness, "targets": list(witness.targets)}),
                "maximal": artifacts_to_json({"witness": maximal, "targets": list(maximal.targets)}),
            },
        )

    # replication

    def _report_rows(self, sink: RowSink, report: ReplicationReport) -> None:
        for record in report.levels:
            n = record.level
            for name, value in record.model_dump(exclude={"level", "verdict", "shells", "failure"}).items():
                if isinstance(value, (int, float)):
                    sink.add(n, name, value)
            for shell in getattr(record, "shells", []):
                sink.add(n, f"shell{shell.k}.l1", shell.l1, _verdict(shell.l1 < shell.budget))
                sink.add(n, f"shell{shell.k}.defect", shell.defect, _verdict(shell.valid))
            if record.verdict == "stalled":
                sink.add(n, "level_verdict", 0.0, "fail")
            else:
                sink.flag(n, "level_verdict", record.verdict == "pass")
        if report.stalled_at is not None:
            sink.add(report.stalled_at, "stalled", report.stalled_at, "fail")
            if report.spectral_gap is not None:
                sink.add(report.stalled_at, "spectral_gap", report.spectral_gap)
        sink.add(0, "limit_distance", report.limit_distance)
        if report.limit_bound is not None:
            sink.add(0, "limit_bound", report.limit_bound)
        for n in report.vacuous_levels:
            sink.add(n, "vacuous_budget", 1.0)
        problems = audit_report(report)
        for problem in problems:
            logger.warning(f"{report.kind} audit: {problem}")
        sink.add(0, "audit_problems", len(problems), _verdict(not problems))
        sink.flag(0, "verdict", report.verdict == "pass")

    def _dump_report(self, name: str, report: ReplicationReport) -> None:
        if self.dump_dir is None:
            return
        self._dump(
            name,
            {"report": report.model_dump(mode="json"), "artifacts": artifacts_to_json(report.artifacts)},
        )

    def _prop1_trial(self, sink: RowSink, trial: Trial) -> None:
        budgets = self.config.budgets
        report = replicate_prop1(self.kernel, trial.x, budgets.n_max, budgets.tol, self.config.schedule)
        self._report_rows(sink, report)
        self._dump_report(f"prop1.trial{trial.index}", report)

    def _theorem_trial(self, sink: RowSink, trial: Trial) -> None:
        budgets = self.config.budgets
        try:
            report = replicate_theorem(
                self.kernel, trial.x, budgets.n_max, budgets.tol, self.config.schedule
            )
        except InfeasibleBudgetError as e:
            logger.warning(f"Theorem replication infeasible: {e}")
            sink.add(0, f"infeasible.{e.step}", self.shape.total_trace, "fail")
            return
        self._report_rows(sink, report)
        self._dump_report(f"theorem.trial{trial.index}", report)

    # embed

    def _run_embed(self) -> list[ResultRow]:
        sink = self._sink(Command.EMBED)
        seed = self.trials[0].probe_seed
        for n in self.config.norm_ids:
            report = embedding_probe(n, self.shape, seed, self.config.trials)
            sink.flag(0, f"{n.label}.minimal", report.minimal)
            sink.add(0, f"{n.label}.c_lower", report.c_lower, _verdict(report.c_lower <= 1.0 + RATIO_RTOL))
            sink.add(0, f"{n.label}.c_upper", report.c_upper)
            sink.add(0, f"{n.label}.c_upper_linf", report.c_upper_linf)
        return sink.rows


def run(config: ExperimentConfig, command: Command | str, dump_dir: Path | None = None) -> list[ResultRow]:
    """Module-level shortcut for ExperimentRunner(config, dump_dir).run(command)"""
    return ExperimentRunner(config, dump_dir).run(command)


def any_failed(rows: Sequence[ResultRow]) -> bool:
    return any(row.verdict == "fail" for row in rows)


