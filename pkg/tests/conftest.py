"""
Shared fixtures

テスト全体で使う代数の形状と hypothesis の設定
"""

import pytest
from hypothesis import HealthCheck, settings

from ncerg.algebra import AlgebraShape

# 行列の対角化は遅いので例の数を抑える
settings.register_profile(
    "ncerg",
    max_examples=25,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("ncerg")


@pytest.fixture
def mixed_shape() -> AlgebraShape:
    """M_2 (重み 1) ⊕ M_1 (重み 0.5)"""
    return AlgebraShape.from_pairs([(2, 1.0), (1, 0.5)])


@pytest.fixture
def diagonal_shape() -> AlgebraShape:
    """可換な 3 点空間"""
    return AlgebraShape.diagonal([0.5, 1.0, 1.5])


@pytest.fixture
def matrix_shape() -> AlgebraShape:
    """単一ブロック M_3"""
    return AlgebraShape.from_pairs([(3, 1.0)])
