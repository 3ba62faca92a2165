"""Exception hierarchy for quantum_leakage."""
from __future__ import annotations

from typing import Any, List, Optional


class QuantumLeakageError(Exception):
    pass


class InvalidArgumentError(QuantumLeakageError, ValueError):
    pass


class DimensionMismatchError(InvalidArgumentError):
    pass


class ValidationError(QuantumLeakageError, ValueError):
    """Raised when an object violates its state/measurement/channel invariants."""

    def __init__(self, message: str, violations: Optional[List[Any]] = None):
        super().__init__(message)
        self.violations = list(violations or [])


class InvalidChannelError(ValidationError):
    pass


class NumericError(QuantumLeakageError, ArithmeticError):
    pass


class DegenerateEnsembleError(NumericError):
    pass

