"""
Kernel Constructor Tests

ユニタリ混合・ピンチング・Markov・Schur 乗数・合成・共役のテストスイート
"""

import numpy as np
import pytest

from ncerg.algebra import AlgebraShape, Operator, random_operator, random_unitary, trace
from ncerg.errors import KernelError, ShapeMismatchError
from ncerg.kernels import (
    KernelRep,
    apply,
    certify_DS,
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


class TestKernelRep:
    """KernelRepのテスト"""

    def setup_method(self):
        """テストセットアップ"""
        self.shape = AlgebraShape.from_pairs([(2, 1.0), (1, 0.5)])

    def test_identity(self):
        """恒等核"""
        t = KernelRep.identity(self.shape)
        x = random_operator(self.shape, "general", 1)

        assert apply(t, x) == x
        assert t(x) == x
        assert t.dim == 5
        assert t.l2_opnorm() == pytest.approx(1.0)
        assert t.recipe.kind == "identity"

    def test_size_checked(self):
        """超作用素の大きさ"""
        with pytest.raises(ShapeMismatchError):
            KernelRep(self.shape, np.eye(4))

    def test_non_finite(self):
        """非有限な成分"""
        matrix = np.eye(5)
        matrix[0, 0] = np.inf
        with pytest.raises(KernelError):
            KernelRep(self.shape, matrix)

    def test_apply_shape_mismatch(self):
        """異なる形状の作用素への適用"""
        t = KernelRep.identity(self.shape)
        with pytest.raises(ShapeMismatchError):
            t.apply(Operator.identity(AlgebraShape.from_pairs([(3, 1.0)])))

    def test_trace_duality(self):
        """τ(T(x) y*) = τ(x T†(y)*)"""
        t = from_unitary_mixture(
            self.shape, [0.3, 0.7], [random_unitary(self.shape, 1), random_unitary(self.shape, 2)]
        )
        x = random_operator(self.shape, "general", 3)
        y = random_operator(self.shape, "general", 4)

        left = trace(t.apply(x) @ y.adjoint())
        right = trace(x @ t.trace_adjoint().apply(y).adjoint())
        assert left == pytest.approx(right, abs=1e-12)


class TestUnitaryMixture:
    """from_unitary_mixtureのテスト"""

    def setup_method(self):
        """テストセットアップ"""
        self.shape = AlgebraShape.from_pairs([(2, 1.0), (1, 0.5)])

    def test_conjugation(self):
        """単一ユニタリでは x ↦ u x u*"""
        u = random_unitary(self.shape, 9)
        x = random_operator(self.shape, "general", 1)
        t = from_unitary_mixture(self.shape, [1.0], [u])

        assert t.apply(x).allclose(u @ x @ u.adjoint(), atol=1e-12)
        assert certify_DS(t).passed

    def test_weight_errors(self):
        """確率ベクトルでない重み"""
        u = random_unitary(self.shape, 1)
        with pytest.raises(KernelError):
            from_unitary_mixture(self.shape, [0.5, 0.6], [u, u])
        with pytest.raises(KernelError):
            from_unitary_mixture(self.shape, [1.5, -0.5], [u, u])
        with pytest.raises(KernelError):
            from_unitary_mixture(self.shape, [1.0], [u, u])

    def test_not_unitary(self):
        """ユニタリでない行列"""
        with pytest.raises(KernelError, match="not unitary"):
            from_unitary_mixture(self.shape, [1.0], [2.0 * np.eye(3)])

    def test_block_permutation(self):
        """同じ (次元, 重み) のブロック間の置換は許される"""
        shape = AlgebraShape.diagonal([1.0, 1.0])
        swap = np.array([[0.0, 1.0], [1.0, 0.0]])
        t = from_unitary_mixture(shape, [1.0], [swap])

        x = Operator.from_diagonal(shape, [1.0, 2.0])
        assert t.apply(x).allclose(Operator.from_diagonal(shape, [2.0, 1.0]))

    def test_weight_changing_permutation(self):
        """重みの異なるブロックの入れ替えは拒否される"""
        shape = AlgebraShape.diagonal([1.0, 2.0])
        swap = np.array([[0.0, 1.0], [1.0, 0.0]])
        with pytest.raises(KernelError, match="trace would not be preserved"):
            from_unitary_mixture(shape, [1.0], [swap])

    def test_cyclic_shift(self):
        """全巡回置換は一様な対角形状でのみ"""
        shape = AlgebraShape.diagonal([1.0, 1.0, 1.0])
        t = from_unitary_mixture(shape, [1.0], [cyclic_shift(shape)])
        x = Operator.from_diagonal(shape, [1.0, 0.0, 0.0])

        assert t.apply(x).allclose(Operator.from_diagonal(shape, [0.0, 1.0, 0.0]))
        with pytest.raises(KernelError):
            cyclic_shift(self.shape)


class TestPinching:
    """from_pinchingのテスト"""

    def setup_method(self):
        """テストセットアップ"""
        self.shape = AlgebraShape.from_pairs([(3, 1.0), (2, 0.5)])

    def test_masks_off_cell_entries(self):
        """セル外の成分を 0 にする"""
        t = from_pinching(self.shape, [[[0, 1], [2]], [[0], [1]]])
        x = Operator(self.shape, [np.ones((3, 3)), np.ones((2, 2))])
        image = t.apply(x)

        np.testing.assert_array_equal(image.blocks[0], [[1, 1, 0], [1, 1, 0], [0, 0, 1]])
        np.testing.assert_array_equal(image.blocks[1], np.eye(2))

    def test_idempotent(self):
        """ピンチングは冪等"""
        t = full_pinching(self.shape)
        np.testing.assert_array_equal(t.superoperator @ t.superoperator, t.superoperator)
        assert certify_DS(t).passed

    @pytest.mark.parametrize(
        "partition",
        [
            [[[0, 1]], [[0], [1]]],
            [[[0, 1], [1, 2]], [[0, 1]]],
            [[[0, 1, 2], []], [[0, 1]]],
            [[[0, 1, 2]]],
        ],
    )
    def test_bad_partitions(self, partition):
        """分割になっていない入力"""
        with pytest.raises(KernelError):
            from_pinching(self.shape, partition)


class TestMarkov:
    """from_markovのテスト"""

    def setup_method(self):
        """テストセットアップ"""
        self.shape = AlgebraShape.diagonal([0.5, 1.0, 1.5])

    def test_metropolis_is_certified(self):
        """Metropolis 行列は重み付き列条件を等号で満たす"""
        k = metropolis_matrix(self.shape.weights)
        w = np.asarray(self.shape.weights)

        np.testing.assert_allclose(w @ k, w)
        np.testing.assert_allclose(k.sum(axis=1), 1.0)
        assert certify_DS(from_markov(self.shape, k)).passed

    def test_action(self):
        """(Tf)_i = Σ_j K_ij f_j"""
        k = metropolis_matrix(self.shape.weights)
        f = np.array([1.0, 2.0, 3.0])
        image = from_markov(self.shape, k).apply(Operator.from_diagonal(self.shape, f))
        np.testing.assert_allclose(image.diagonal().real, k @ f)

    def test_row_sum(self):
        """行和が 1 を超える行列"""
        with pytest.raises(KernelError, match="Row"):
            from_markov(self.shape, np.full((3, 3), 0.5))

    def test_weighted_column(self):
        """重み付き列条件の違反"""
        k = np.array([[0.0, 0.0, 1.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
        with pytest.raises(KernelError, match="Weighted column"):
            from_markov(self.shape, k)

    def test_needs_diagonal_shape(self):
        """非可換な形状は拒否される"""
        with pytest.raises(KernelError):
            from_markov(AlgebraShape.from_pairs([(2, 1.0)]), np.eye(2))


class TestSchur:
    """from_schurのテスト"""

    def setup_method(self):
        """テストセットアップ"""
        self.shape = AlgebraShape.from_pairs([(3, 1.0)])

    def test_all_ones_is_identity(self):
        """全成分 1 の記号は恒等核"""
        t = from_schur(self.shape, np.ones((3, 3)))
        assert t.allclose(KernelRep.identity(self.shape))

    def test_identity_symbol_is_full_pinching(self):
        """単位行列の記号は対角へのピンチング"""
        assert from_schur(self.shape, np.eye(3)).allclose(full_pinching(self.shape))

    def test_invalid_symbols(self):
        """半正定値でない・対角が 1 を超える記号"""
        with pytest.raises(KernelError, match="not PSD"):
            from_schur(self.shape, np.array([[1, 2, 0], [2, 1, 0], [0, 0, 1]]))
        with pytest.raises(KernelError):
            from_schur(self.shape, 2.0 * np.eye(3))
        with pytest.raises(KernelError, match="Hermitian"):
            from_schur(self.shape, np.triu(np.ones((3, 3))))
        with pytest.raises(KernelError):
            from_schur(AlgebraShape.from_pairs([(1, 1.0), (1, 1.0)]), np.eye(1))


class TestCombineAndConjugate:
    """combine と conjugate のテスト"""

    def setup_method(self):
        """テストセットアップ"""
        self.shape = AlgebraShape.from_pairs([(2, 1.0), (2, 0.5)])
        self.pinch = full_pinching(self.shape)
        self.mixture = from_unitary_mixture(
            self.shape, [0.5, 0.5], [random_unitary(self.shape, 1), random_unitary(self.shape, 2)]
        )

    def test_compose(self):
        """合成は順に適用する"""
        x = random_operator(self.shape, "general", 5)
        t = combine([self.pinch, self.mixture], "compose")

        assert t.apply(x).allclose(self.pinch.apply(self.mixture.apply(x)), atol=1e-12)
        assert certify_DS(t).passed
        assert t.recipe.kind == "combine"

    def test_convex(self):
        """凸結合"""
        x = random_operator(self.shape, "general", 6)
        t = combine([self.pinch, self.mixture], "convex", [0.25, 0.75])
        expected = self.pinch.apply(x).scale(0.25) + self.mixture.apply(x).scale(0.75)

        assert t.apply(x).allclose(expected, atol=1e-12)

    def test_combine_errors(self):
        """引数の誤り"""
        with pytest.raises(KernelError):
            combine([])
        with pytest.raises(KernelError):
            combine([self.pinch], "compose", [1.0])
        with pytest.raises(KernelError):
            combine([self.pinch, self.mixture], "convex")
        other = KernelRep.identity(AlgebraShape.from_pairs([(1, 1.0)]))
        with pytest.raises(ShapeMismatchError):
            combine([self.pinch, other])

    def test_conjugate(self):
        """x ↦ u T(u* x u) u*"""
        u = random_unitary(self.shape, 7)
        x = random_operator(self.shape, "general", 8)
        t = conjugate(self.pinch, u)

        expected = u @ self.pinch.apply(u.adjoint() @ x @ u) @ u.adjoint()
        assert t.apply(x).allclose(expected, atol=1e-12)
        assert certify_DS(t).passed

    def test_conjugate_needs_unitary(self):
        """ユニタリでない共役"""
        with pytest.raises(KernelError):
            conjugate(self.pinch, Operator.identity(self.shape).scale(2.0))
