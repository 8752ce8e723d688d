"""
Replication Tests

平均収束と d.s.a.e. 収束の予算付き再現と自己監査のテストスイート
"""

import json
import logging

import numpy as np
import pytest

from ncerg.algebra import AlgebraShape, Operator, random_operator, random_unitary
from ncerg.errors import AlgebraError, InfeasibleBudgetError, UncertifiedKernelError
from ncerg.ergodic import (
    DEFAULT_SCHEDULE,
    Prop1Level,
    TheoremLevel,
    artifacts_to_json,
    audit_report,
    replicate_prop1,
    replicate_theorem,
)
from ncerg.kernels import (
    KernelRep,
    conjugate,
    cyclic_shift,
    from_unitary_mixture,
    full_pinching,
    random_kernel,
)

SCHEDULE = [2**k for k in range(13)]


def _shift_kernel(n: int) -> KernelRep:
    shape = AlgebraShape.diagonal([1.0] * n)
    return from_unitary_mixture(shape, [1.0], [cyclic_shift(shape)])


def _lazy_shift_kernel(n: int, stay: float, weight: float = 1.0) -> KernelRep:
    shape = AlgebraShape.diagonal([weight] * n)
    return from_unitary_mixture(shape, [stay, 1.0 - stay], [np.eye(n), cyclic_shift(shape)])


def _unit_element(shape: AlgebraShape, seed: int) -> Operator:
    x = random_operator(shape, "hermitian", seed)
    return x.scale(1.0 / x.max_abs())


class TestReplicateProp1:
    """replicate_prop1のテスト"""

    def setup_method(self):
        """テストセットアップ"""
        self.shape = AlgebraShape.from_pairs([(3, 1.0)])
        self.t = full_pinching(self.shape)
        self.x = random_operator(self.shape, "hermitian", 5)

    def test_pinching_passes(self):
        """冪等な核では全レベルで合格"""
        report = replicate_prop1(self.t, self.x, n_max=4, tol=1e-9, schedule=SCHEDULE)

        assert report.kind == "prop1"
        assert report.verdict == "pass"
        assert report.stalled_at is None
        assert [level.level for level in report.levels] == [1, 2, 3, 4]
        for level in report.levels:
            assert isinstance(level, Prop1Level)
            assert level.verdict == "pass"
            assert level.x2_linf <= level.cut + 1e-12
            assert level.limit_l1 < level.cut
            assert level.pair_bound <= level.threshold + 1e-9
            assert level.l_n in SCHEDULE

    def test_audit_is_clean(self):
        """記録値は保存した作用素から再計算できる"""
        report = replicate_prop1(self.t, self.x, n_max=3, tol=1e-9, schedule=SCHEDULE)
        assert audit_report(report) == []

    def test_audit_detects_tampering(self):
        """書き換えたレポートは監査で検出される"""
        report = replicate_prop1(self.t, self.x, n_max=2, tol=1e-9, schedule=SCHEDULE)
        first = report.levels[0].model_copy(update={"pair_bound": 123.0})
        tampered = report.model_copy(update={"levels": [first, *report.levels[1:]]})

        problems = audit_report(tampered)
        assert any("pair bound" in p for p in problems)

    def test_audit_without_artifacts(self):
        """作用素のないレポートは監査できない"""
        report = replicate_prop1(self.t, self.x, n_max=1, tol=1e-9, schedule=SCHEDULE)
        stripped = report.model_copy(update={"artifacts": {}})
        assert audit_report(stripped) == ["report carries no artifacts to audit"]

    def test_stalls_on_short_schedule(self):
        """周辺スペクトルがありスケジュールが短いと停止する"""
        t = _shift_kernel(3)
        x = Operator.from_diagonal(t.shape, [1.0, 0.0, 0.0])
        report = replicate_prop1(t, x, n_max=3, tol=1e-9, schedule=[1, 2])

        assert report.verdict == "fail"
        assert report.stalled_at == 1
        assert report.levels[0].verdict == "stalled"
        assert report.spectral_gap == pytest.approx(0.0, abs=1e-12)
        assert "schedule exhausted" in report.failure

    def test_preconditions(self):
        """未認証の核と不正な n_max"""
        doubling = KernelRep(self.shape, 2 * np.eye(9))
        with pytest.raises(UncertifiedKernelError):
            replicate_prop1(doubling, self.x, 1, 1e-9, SCHEDULE)
        with pytest.raises(AlgebraError):
            replicate_prop1(self.t, self.x, 0, 1e-9, SCHEDULE)

    def test_artifacts_to_json(self):
        """中間生成物は JSON に書き出せる"""
        report = replicate_prop1(self.t, self.x, n_max=1, tol=1e-9, schedule=[1, 2, 4])
        document = artifacts_to_json(report.artifacts)

        assert {"x", "limit", "trajectory", "n1.x1", "n1.x2"} <= set(document)
        assert document["trajectory"]["schedule"] == [1, 2, 4]
        json.dumps(document)
        assert "artifacts" not in report.model_dump()

    def test_identity_kernel(self):
        """恒等核では l(n) = 1 で組の上限は 0"""
        t = KernelRep.identity(self.shape)
        report = replicate_prop1(t, self.x, n_max=3, tol=1e-9, schedule=SCHEDULE)

        assert report.verdict == "pass"
        for level in report.levels:
            assert level.l_n == 1
            assert level.pair_bound == pytest.approx(0.0, abs=1e-12)
            assert level.pairs == len(SCHEDULE) * (len(SCHEDULE) - 1) // 2

    def test_stalls_without_pairs(self):
        """l(n) がスケジュールの最後の点なら比較する組がなく停止する"""
        t = KernelRep.identity(self.shape)
        report = replicate_prop1(t, self.x, n_max=2, tol=1e-9, schedule=[1])

        assert report.verdict == "fail"
        assert report.stalled_at == 1
        assert report.levels[0].verdict == "stalled"
        assert report.levels[0].pair_bound is None
        assert "no pair" in report.failure
        assert report.spectral_gap == pytest.approx(1.0)

    def test_stalls_when_limit_reached_last(self):
        """極限への到達が最後の点だけでも合格にはならない"""
        t = _lazy_shift_kernel(3, 0.5)
        x = Operator.from_diagonal(t.shape, [1.0, 0.0, 0.0])
        report = replicate_prop1(t, x, n_max=1, tol=1e-9, schedule=[1, 2**14])

        assert report.verdict == "fail"
        assert report.stalled_at == 1
        assert "schedule exhausted" in report.failure



class TestReplicateTheorem:
    """replicate_theoremのテスト"""

    def setup_method(self):
        """テストセットアップ"""
        self.shape = AlgebraShape.from_pairs([(3, 1.0)])
        self.t = full_pinching(self.shape)
        self.x = random_operator(self.shape, "hermitian", 6)

    def test_pinching_passes(self):
        """冪等な核では全レベルで合格"""
        report = replicate_theorem(self.t, self.x, n_max=2, tol=1e-9, schedule=SCHEDULE)

        assert report.kind == "theorem"
        assert report.verdict == "pass"
        assert report.stalled_at is None
        assert report.limit_bound is not None
        for level in report.levels:
            assert isinstance(level, TheoremLevel)
            assert level.verdict == "pass"
            assert level.x12_l1 <= level.x12_budget * (1 + 1e-9)
            assert level.e2_defect < level.defect_budget
            assert level.final_bound <= level.threshold + 1e-9
            assert all(shell.l1 < shell.budget for shell in level.shells)
            assert all(shell.valid for shell in level.shells)

    def test_audit_is_clean(self):
        """記録値は保存した作用素から再計算できる"""
        report = replicate_theorem(self.t, self.x, n_max=1, tol=1e-9, schedule=SCHEDULE)
        assert audit_report(report) == []

    def test_infeasible_budget(self):
        """τ(1) ≤ 2^-4 では予算を満たせない"""
        shape = AlgebraShape.diagonal([0.05])
        with pytest.raises(InfeasibleBudgetError) as excinfo:
            replicate_theorem(
                KernelRep.identity(shape), Operator.identity(shape), 1, 1e-9, SCHEDULE
            )
        assert excinfo.value.step == "budget"

    def test_stalls_without_witness(self):
        """短いスケジュールでは E(n) の証人が見つからない"""
        t = _shift_kernel(3)
        x = Operator.from_diagonal(t.shape, [6.0, 0.0, 0.0])
        report = replicate_theorem(t, x, n_max=2, tol=1e-9, schedule=[1, 2])

        assert report.verdict == "fail"
        assert report.stalled_at == 1
        assert report.failure.startswith("E(1)")
        assert report.levels[0].verdict == "stalled"
        assert report.spectral_gap == pytest.approx(0.0, abs=1e-12)
        assert report.limit_bound is None

    def test_shells_partition_x12(self):
        """x12 は複数の層に分かれ、層の和は x12 で各層は予算内"""
        report = replicate_theorem(self.t, self.x, n_max=2, tol=1e-9, schedule=SCHEDULE)

        assert report.verdict == "pass"
        for level in report.levels:
            n = level.level
            assert len(level.shells) >= 2
            total = Operator.zeros(self.shape)
            for shell in level.shells:
                assert shell.l1 < 2.0 ** (-8 * (n + shell.k))
                total = total + report.artifacts[f"n{n}.shell{shell.k}"]
            assert total.allclose(report.artifacts[f"n{n}.x12"], atol=1e-14)

    def test_audit_detects_missing_shell_mass(self):
        """層の和が x12 と食い違えば監査で検出される"""
        report = replicate_theorem(self.t, self.x, n_max=1, tol=1e-9, schedule=SCHEDULE)
        x12 = report.artifacts["n1.x12"]
        report.artifacts["n1.x12"] = x12.scale(2.0)

        problems = audit_report(report)
        assert any("shells do not sum to x12" in p for p in problems)

    def test_identity_kernel(self):
        """恒等核では E(2,n) = 1 で最終上限は 0"""
        t = KernelRep.identity(self.shape)
        report = replicate_theorem(t, self.x, n_max=2, tol=1e-9, schedule=SCHEDULE)

        assert report.verdict == "pass"
        for level in report.levels:
            assert level.l_n == 1
            assert level.e2_defect == pytest.approx(0.0, abs=1e-12)
            assert level.final_bound == pytest.approx(0.0, abs=1e-12)
        assert report.artifacts["n1.e2"].defect == pytest.approx(0.0, abs=1e-12)

    def test_stalls_without_pairs(self):
        """証人が最後の点でしか得られなければ比較する組がなく停止する"""
        t = KernelRep.identity(self.shape)
        report = replicate_theorem(t, self.x, n_max=2, tol=1e-9, schedule=[1])

        assert report.verdict == "fail"
        assert report.stalled_at == 1
        assert report.failure.startswith("E(1): schedule exhausted")
        assert "no pair" in report.failure
        assert report.levels[0].verdict == "stalled"
        assert report.levels[0].final_bound is None
        assert report.spectral_gap == pytest.approx(1.0)
        assert report.limit_bound is None

    def test_vacuous_levels(self, caplog):
        """最小ブロック重みが欠損予算以上のレベルは警告され記録される"""
        caplog.set_level(logging.WARNING, logger="ncerg.ergodic.replication")
        t = KernelRep.identity(self.shape)
        report = replicate_theorem(t, self.x, n_max=2, tol=1e-9, schedule=SCHEDULE)

        assert report.vacuous_levels == [1, 2]
        assert any("forced to 1" in r.getMessage() for r in caplog.records)

    @pytest.mark.parametrize(
        "pairs, n_max, expected",
        [
            ([(1, 1e-3), (1, 1.0)], 3, [3]),
            ([(1, 1e-3), (1, 1.0)], 2, []),
            ([(1, 1e-6), (2, 1.0)], 2, []),
        ],
    )
    def test_vacuous_levels_by_weight(self, pairs, n_max, expected):
        """2^(-4n) が最小重みを下回る最初のレベルから予算は空になる"""
        shape = AlgebraShape.from_pairs(pairs)
        report = replicate_theorem(
            KernelRep.identity(shape), Operator.identity(shape), n_max, 1e-9, SCHEDULE
        )
        assert report.vacuous_levels == expected


class TestConjugationInvariance:
    """ユニタリ共役に対する再現結果の不変性のテスト"""

    def setup_method(self):
        """テストセットアップ"""
        self.shape = AlgebraShape.from_pairs([(3, 1.0)])
        self.t = full_pinching(self.shape)
        self.u = random_unitary(self.shape, 11)
        self.t_conj = conjugate(self.t, self.u)

    def _conjugated(self, x: Operator) -> Operator:
        return self.u @ x @ self.u.adjoint()

    def test_prop1(self):
        """x ↦ uxu* と T ↦ Ad(u)TAd(u*) で判定とノルムは変わらない"""
        x = random_operator(self.shape, "hermitian", 5)
        before = replicate_prop1(self.t, x, n_max=3, tol=1e-9, schedule=SCHEDULE)
        after = replicate_prop1(self.t_conj, self._conjugated(x), n_max=3, tol=1e-9, schedule=SCHEDULE)

        assert after.verdict == before.verdict == "pass"
        assert after.limit_distance == pytest.approx(before.limit_distance, rel=1e-6, abs=1e-9)
        for a, b in zip(after.levels, before.levels, strict=True):
            assert a.verdict == b.verdict
            assert a.l_n == b.l_n
            assert a.x1_l1 == pytest.approx(b.x1_l1, rel=1e-9)
            assert a.pair_bound == pytest.approx(b.pair_bound, rel=1e-6, abs=1e-9)

    def test_theorem(self):
        """d.s.a.e. 再現の判定と上限も共役で変わらない"""
        x = random_operator(self.shape, "hermitian", 6)
        before = replicate_theorem(self.t, x, n_max=2, tol=1e-9, schedule=SCHEDULE)
        after = replicate_theorem(self.t_conj, self._conjugated(x), n_max=2, tol=1e-9, schedule=SCHEDULE)

        assert after.verdict == before.verdict == "pass"
        for a, b in zip(after.levels, before.levels, strict=True):
            assert a.verdict == b.verdict
            assert a.l_n == b.l_n
            assert a.x12_l1 == pytest.approx(b.x12_l1, rel=1e-6, abs=1e-15)
            assert a.e2_defect == pytest.approx(b.e2_defect, abs=1e-9)
            assert a.final_bound == pytest.approx(b.final_bound, rel=1e-6, abs=1e-9)


def _prop1_pairs() -> list[tuple[KernelRep, Operator]]:
    shape = AlgebraShape.from_pairs([(3, 1.0), (2, 0.5)])
    pairs = [(random_kernel(shape, "pinching", seed), _unit_element(shape, 100 + seed)) for seed in range(5)]
    for i, (n, stay) in enumerate([(2, 0.4), (3, 0.5), (3, 0.3), (4, 0.5), (3, 0.6)]):
        t = _lazy_shift_kernel(n, stay)
        pairs.append((t, _unit_element(t.shape, 200 + i)))
    return pairs


def _theorem_pairs() -> list[tuple[KernelRep, Operator]]:
    shape = AlgebraShape.from_pairs([(3, 2.0**15)])
    pairs = [(random_kernel(shape, "pinching", seed), _unit_element(shape, 300 + seed)) for seed in range(3)]
    square = AlgebraShape.from_pairs([(2, 2.0**15)])
    pairs.append((conjugate(full_pinching(square), random_unitary(square, 3)), _unit_element(square, 303)))
    t = _lazy_shift_kernel(4, 0.5, weight=2.0**14)
    pairs.append((t, _unit_element(t.shape, 304)))
    return pairs


class TestReplicationBudgets:
    """再現の数値予算を複数の核と元の組で確かめるテスト"""

    @pytest.mark.slow
    @pytest.mark.parametrize("index", range(10))
    def test_prop1_levels_1_to_8(self, index):
        """n = 1..8 で組の上限 4·2^-n を満たす"""
        t, x = _prop1_pairs()[index]
        report = replicate_prop1(t, x, n_max=8, tol=1e-9, schedule=DEFAULT_SCHEDULE)

        assert report.verdict == "pass", report.failure
        assert len(report.levels) == 8
        for level in report.levels:
            assert level.pair_bound <= 4 * 2.0**-level.level + 1e-9

    @pytest.mark.slow
    @pytest.mark.parametrize("index", range(5))
    def test_theorem_levels_1_to_4(self, index):
        """τ(1) ≥ 2^16 の形状で n = 1..4 の全予算を満たし監査も通る"""
        t, x = _theorem_pairs()[index]
        assert t.shape.total_trace >= 2.0**16
        report = replicate_theorem(t, x, n_max=4, tol=1e-9, schedule=DEFAULT_SCHEDULE)

        assert report.verdict == "pass", report.failure
        assert len(report.levels) == 4
        for level in report.levels:
            n = level.level
            assert level.x2_linf < 2.0 ** (-4 * n)
            assert all(shell.l1 < 2.0 ** (-8 * (n + shell.k)) for shell in level.shells)
            assert level.e2_defect < 2.0 ** (-4 * n)
            assert level.final_bound <= 8 * 2.0**-n + 1e-9
        assert audit_report(report) == []
