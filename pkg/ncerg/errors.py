"""
Errors

ncerg 全体で共有する例外クラス
"""

from typing import Any


class NcergError(Exception):
    """Base class for every error raised by ncerg"""

    pass


class ShapeMismatchError(NcergError):
    """Operands live on different algebra shapes"""

    def __init__(self, left: Any, right: Any):
        self.left = left
        self.right = right
        super().__init__(f"Shape mismatch: {left} vs {right}")


class NotHermitianError(NcergError):
    """Input expected to be Hermitian is not"""

    def __init__(self, residual: float):
        self.residual = residual
        super().__init__(f"Operator is not Hermitian (residual {residual:.3e})")


class ConvergenceError(NcergError):
    """Iterative diagonalizer exhausted its sweep budget"""

    def __init__(self, residual: float, sweeps: int):
        self.residual = residual
        self.sweeps = sweeps
        super().__init__(
            f"Jacobi iteration did not converge after {sweeps} sweeps "
            f"(off-diagonal residual {residual:.3e})"
        )


class AlgebraError(NcergError):
    """Invalid argument to an algebra operation"""

    pass


class OrliczError(NcergError):
    """Invalid Orlicz function or non-finite evaluation"""

    pass


class NormParseError(NcergError):
    """Unrecognised symmetric norm name"""

    pass


class KernelError(NcergError):
    """Kernel constructor precondition violated"""

    pass


class UncertifiedKernelError(KernelError):
    """Operation requires a DS+ certified kernel"""

    def __init__(self, failures: list[str]):
        self.failures = failures
        super().__init__(f"Kernel failed DS+ certification: {', '.join(failures)}")


class InfeasibleBudgetError(NcergError):
    """Replication precondition on trace budgets cannot be met"""

    def __init__(self, step: str, message: str):
        self.step = step
        super().__init__(f"[{step}] {message}")


class ConfigError(NcergError):
    """Experiment config is syntactically or semantically invalid"""

    def __init__(
        self,
        violations: list[str],
        line: int | None = None,
        column: int | None = None,
    ):
        self.violations = violations
        self.line = line
        self.column = column
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(f"Invalid config{where}: " + "; ".join(violations))


class EmitError(NcergError):
    """Writing results failed"""

    def __init__(self, path: str, reason: str):
        self.path = path
        super().__init__(f"Failed to write {path}: {reason}")


class ScheduleError(NcergError):
    """Averaging schedule is empty, not strictly increasing, or too short"""

    pass
