"""
Fixed Space

核の固定空間 ker(I - T) と τ 直交射影、スペクトルギャップ診断
"""

import logging
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from ncerg.algebra import AlgebraShape, Operator
from ncerg.algebra.operator import ComplexArray
from ncerg.errors import ShapeMismatchError, UncertifiedKernelError

from .certify import certify_DS
from .kernel import KernelRep, weight_vector

logger = logging.getLogger(__name__)

# singular values of I - T below this span the fixed space
FIXED_TOL = 1e-9
PERIPHERAL_TOL = 1e-9


@dataclass(frozen=True)
class FixedSpace:
    """
    τ 内積 ⟨x, y⟩ = τ(y* x) で正規直交な固定空間の基底と直交射影
    """

    shape: AlgebraShape
    basis: tuple[Operator, ...]
    projector: ComplexArray

    @property
    def dim(self) -> int:
        return len(self.basis)

    def project(self, x: Operator) -> Operator:
        if x.shape != self.shape:
            raise ShapeMismatchError(self.shape, x.shape)
        return Operator.from_vector(self.shape, self.projector @ x.to_vector())

    def __call__(self, x: Operator) -> Operator:
        return self.project(x)


def fixed_space(t: KernelRep) -> FixedSpace:
    """
    固定空間 {x : T(x) = x} を計算

    τ 正規直交座標での I - T の特異値分解から核空間を取り出す

    Args:
        t: DS⁺ 認証済みの核

    Returns:
        FixedSpace: 基底と射影
    """
    certification = certify_DS(t)
    if not certification.passed:
        raise UncertifiedKernelError(certification.failures)

    root = np.sqrt(weight_vector(t.shape))
    weighted = t.weighted_superoperator()
    _, sigma, vh = np.linalg.svd(np.eye(t.dim) - weighted)
    q = vh[sigma <= FIXED_TOL].conj().T
    basis = tuple(Operator.from_vector(t.shape, q[:, i] / root) for i in range(q.shape[1]))
    projector = ((q @ q.conj().T) / root[:, None]) * root
    logger.info(f"Fixed space of {t!r} has dimension {len(basis)}")
    return FixedSpace(t.shape, basis, projector)


def _spectrum(t: KernelRep) -> NDArray[np.complex128]:
    return np.linalg.eigvals(t.superoperator)


def spectral_gap(t: KernelRep) -> float:
    """
    1 - max{|λ| : λ ∈ spec(T), |λ - 1| > 1e-9}

    0 なら 1 以外の周辺スペクトルがあり、Cesàro 平均の収束は遅い
    """
    spectrum = _spectrum(t)
    others = np.abs(spectrum[np.abs(spectrum - 1.0) > PERIPHERAL_TOL])
    if others.size == 0:
        return 1.0
    return float(max(0.0, 1.0 - others.max()))


def peripheral_spectrum(t: KernelRep) -> list[complex]:
    """Eigenvalues of modulus one, sorted by argument"""
    spectrum = _spectrum(t)
    peripheral = spectrum[np.abs(np.abs(spectrum) - 1.0) <= PERIPHERAL_TOL]
    return [complex(z) for z in sorted(peripheral, key=lambda z: float(np.angle(z)))]
