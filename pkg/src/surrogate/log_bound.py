"""Affine lower bound of -log2(b) used by every SCA step.

For any a > 0, -log2(b) >= -(a*b)/ln2 + log2(a) + 1/ln2, with equality at
a = 1/b. Expanding at b0 fixes a = 1/b0 and gives a bound that is tight at
b0 and affine in b.
"""
import math
from dataclasses import dataclass

import numpy as np

from src.errors import DomainError

LN2 = math.log(2.0)


@dataclass(frozen=True)
class LogSurrogate:
    """Lower bound of -log2 expanded at b0 (coefficient = 1/b0)."""

    coefficient: float
    expansion_point: float

    @property
    def linear_coefficient(self) -> float:
        """Slope of the bound in b."""
        return -self.coefficient / LN2

    @property
    def constant(self) -> float:
        """Intercept of the bound."""
        return math.log2(self.coefficient) + 1.0 / LN2

    def __call__(self, b: float | np.ndarray) -> float | np.ndarray:
        return evaluate(self, b)


def make_surrogate(b0: float) -> LogSurrogate:
    """
    Expand the bound at b0.

    Args:
        b0: Expansion point, > 0

    Returns:
        LogSurrogate with coefficient 1/b0
    """
    if not np.isfinite(b0) or b0 <= 0:
        raise DomainError(f"Expansion point must be positive, got {b0}")
    return LogSurrogate(coefficient=1.0 / b0, expansion_point=float(b0))


def evaluate(surrogate: LogSurrogate, b: float | np.ndarray) -> float | np.ndarray:
    """Value of the bound at b (<= -log2(b), equal at b0)."""
    value = surrogate.linear_coefficient * np.asarray(b, dtype=float) + surrogate.constant
    if np.ndim(value) == 0:
        return float(value)
    return value
