"""
Error types shared by every module.
"""
from typing import Optional


class NormingError(Exception):
    """Base class for all library errors"""


class PreconditionError(NormingError, ValueError):
    """An operation was called with inputs outside of its contract"""


class GridStepError(PreconditionError):
    """Grid too coarse to certify a sup-norm"""

    def __init__(self, step: float, max_step: float) -> None:
        self.step = step
        self.max_step = max_step
        super().__init__(
            f"grid step {step:g} too large for certification; "
            f"maximal admissible step is {max_step:g} (exclusive)"
        )


class ConsistencyError(NormingError, RuntimeError):
    """A mathematically impossible state was reached"""


class SingularBasisError(ConsistencyError):
    """Simplex basis too ill-conditioned to trust"""

    def __init__(self, condition: float, message: Optional[str] = None) -> None:
        self.condition = condition
        super().__init__(
            message or f"numerically singular basis (condition number {condition:.3e})"
        )


class FlowExitError(NormingError):
    """Gradient flow trajectory left the region where the gradient is bounded below"""

    def __init__(self, gradient_norm: float, floor: float) -> None:
        self.gradient_norm = gradient_norm
        self.floor = floor
        super().__init__(
            f"trajectory left the regular neighbourhood: |grad f| = {gradient_norm:.3e} < {floor:.3e}"
        )
