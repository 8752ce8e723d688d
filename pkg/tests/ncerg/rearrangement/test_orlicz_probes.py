"""
Orlicz and Probe Tests

Orlicz 関数の検証・δ2/Δ2 検定・劣多数化・公理検定・埋め込み定数のテストスイート
"""

import numpy as np
import pytest

from ncerg.algebra import AlgebraShape, Operator
from ncerg.errors import AlgebraError, OrliczError, ShapeMismatchError
from ncerg.rearrangement import (
    L1,
    L1_CAP_LINF,
    LINF,
    R0,
    GrowthRegime,
    NormId,
    OrliczFunction,
    StepFunction,
    delta2_check,
    embedding_probe,
    luxemburg_norm,
    majorization_check,
    norm_axiom_suite,
)


class TestOrliczFunction:
    """OrliczFunctionのテスト"""

    def test_parse(self):
        """記述子の解釈"""
        square = OrliczFunction.parse("power:2")
        assert square.spec == "power:2"
        assert square(np.array([3.0]))[0] == pytest.approx(9.0)
        assert OrliczFunction.parse("exp").spec == "exp"

    @pytest.mark.parametrize("spec", ["power:x", "power:0.5", "cosh", "power"])
    def test_parse_errors(self, spec):
        """不正な記述子"""
        with pytest.raises(OrliczError):
            OrliczFunction.parse(spec)

    def test_rejects_non_convex(self):
        """凸でない関数は生成時に拒否される"""
        with pytest.raises(OrliczError):
            OrliczFunction("sqrt", None, np.sqrt)

    def test_rejects_nonzero_origin(self):
        """Ψ(0) ≠ 0 は拒否される"""
        with pytest.raises(OrliczError):
            OrliczFunction("shifted", None, lambda t: t + 1.0)

    def test_equality_ignores_evaluator(self):
        """同じ記述子なら等しい"""
        assert OrliczFunction.parse("power:2") == OrliczFunction.power(2.0)


class TestLuxemburg:
    """luxemburg_normのテスト"""

    def test_single_atom(self):
        """一つの原子では λ = v / Ψ^{-1}(1/m)"""
        step = StepFunction(steps=((2.0, 0.25),))
        assert luxemburg_norm(OrliczFunction.power(2), step) == pytest.approx(1.0, rel=1e-9)

    def test_exp_single_atom(self):
        """exp - 1 の場合 λ = v / log(1 + 1/m)"""
        step = StepFunction(steps=((1.0, 1.0),))
        expected = 1.0 / np.log(2.0)
        assert luxemburg_norm(OrliczFunction.parse("exp"), step) == pytest.approx(expected, rel=1e-9)

    def test_homogeneous(self):
        """λ(c μ) = c λ(μ)"""
        psi = OrliczFunction.parse("exp")
        step = StepFunction(steps=((3.0, 0.5), (1.0, 2.0)))
        scaled = StepFunction(steps=((30.0, 0.5), (10.0, 2.0)))
        assert luxemburg_norm(psi, scaled) == pytest.approx(10 * luxemburg_norm(psi, step), rel=1e-8)


class TestDelta2:
    """delta2_checkのテスト"""

    def test_square(self):
        """t² の比は 4"""
        for regime in GrowthRegime:
            report = delta2_check(OrliczFunction.power(2), regime)
            assert report.passes
            assert report.worst_ratio == pytest.approx(4.0)

    def test_linear(self):
        """t の比は 2"""
        report = delta2_check(OrliczFunction.power(1), "near_zero")
        assert report.passes
        assert report.worst_ratio == pytest.approx(2.0)

    def test_exp_fails_at_infinity(self):
        """exp - 1 は無限遠で Δ2 を満たさない"""
        assert delta2_check(OrliczFunction.parse("exp"), "near_zero").passes
        report = delta2_check(OrliczFunction.parse("exp"), GrowthRegime.NEAR_INFINITY)
        assert not report.passes


class TestMajorization:
    """majorization_checkのテスト"""

    def setup_method(self):
        """テストセットアップ"""
        self.shape = AlgebraShape.diagonal([1.0, 1.0])

    def test_flat_is_majorized(self):
        """平均化した元は元の元に支配される"""
        flat = Operator.from_diagonal(self.shape, [1.0, 1.0])
        peaked = Operator.from_diagonal(self.shape, [2.0, 0.0])

        report = majorization_check(flat, peaked)
        assert report.holds
        assert report.worst_margin == pytest.approx(0.0)

        reverse = majorization_check(peaked, flat)
        assert not reverse.holds
        assert reverse.worst_margin == pytest.approx(-1.0)

    def test_zero(self):
        """零同士"""
        zero = Operator.zeros(self.shape)
        report = majorization_check(zero, zero)
        assert report.holds
        assert report.checked_points == 0

    def test_shape_mismatch(self):
        """形状不一致"""
        other = Operator.zeros(AlgebraShape.diagonal([1.0]))
        with pytest.raises(ShapeMismatchError):
            majorization_check(Operator.zeros(self.shape), other)


class TestNormProbes:
    """公理検定と埋め込み定数のテスト"""

    def setup_method(self):
        """テストセットアップ"""
        self.shape = AlgebraShape.from_pairs([(2, 1.0), (1, 0.5)])

    @pytest.mark.parametrize("text", ["L1", "Linf", "L1capLinf", "L1plusLinf", "Orlicz(power:2)"])
    def test_axiom_suite_passes(self, text):
        """対称ノルムは全ての公理を満たす"""
        report = norm_axiom_suite(NormId.parse(text), self.shape, seed=3, trials=4)

        assert report.passes
        assert {a.axiom for a in report.axioms} == {
            "homogeneity",
            "triangle",
            "unitary_invariance",
            "symmetry",
        }
        assert report.result("triangle").worst_violation <= 1e-8

    def test_axiom_suite_unknown_axiom(self):
        """未知の公理名"""
        report = norm_axiom_suite(L1, self.shape, seed=1, trials=1)
        with pytest.raises(KeyError):
            report.result("associativity")

    def test_trials_must_be_positive(self):
        """標本数は 1 以上"""
        with pytest.raises(AlgebraError):
            norm_axiom_suite(L1, self.shape, seed=0, trials=0)
        with pytest.raises(AlgebraError):
            embedding_probe(L1, self.shape, seed=0, trials=0)

    def test_embedding_minimal(self):
        """極小ノルムは L1∩L∞ と R0 の間に入る"""
        report = embedding_probe(L1, self.shape, seed=5, trials=10)

        assert report.minimal
        assert report.c_upper <= 1.0 + 1e-9
        assert report.c_lower <= 1.0 + 1e-9

    def test_embedding_linf(self):
        """L∞ は非極小でも上側定数は L1∩L∞ に対して測る"""
        report = embedding_probe(LINF, self.shape, seed=5, trials=10)

        assert not report.minimal
        assert report.c_upper <= 1.0 + 1e-9
        assert report.c_upper_linf == pytest.approx(1.0)
        assert report.c_lower <= 1.0 + 1e-9

    def test_embedding_r0(self):
        """R0 自身の下側定数は 1"""
        report = embedding_probe(R0, self.shape, seed=2, trials=5)
        assert report.c_lower == pytest.approx(1.0)

    def test_embedding_upper_constant_uses_intersection_norm(self):
        """非極小ノルムでも C_upper は ‖x‖_L / ‖x‖_{L1∩L∞} の最大値"""
        shape = AlgebraShape.from_pairs([(3, 1.0), (2, 2.0)])
        report = embedding_probe(LINF, shape, seed=1, trials=50)

        # 重みが 1 以上なので ‖x‖∞ ≤ ‖x‖₁ で、一般の標本では等号にならない
        assert report.c_upper < 1.0
        assert report.c_upper_linf == pytest.approx(1.0)

    def test_embedding_cap_norm_is_self_embedded(self):
        """L1∩L∞ 自身の上側定数は 1"""
        report = embedding_probe(L1_CAP_LINF, self.shape, seed=3, trials=5)
        assert report.c_upper == pytest.approx(1.0)
