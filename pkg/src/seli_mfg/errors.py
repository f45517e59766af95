"""Exception types raised across the package."""
from __future__ import annotations


class SeliError(Exception):
    """Base class for all package errors."""


class InvalidConfig(SeliError, ValueError):
    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class ParseError(SeliError, ValueError):
    def __init__(self, line: int, message: str):
        self.line = line
        self.message = message
        super().__init__(f"line {line}: {message}")


class IntegrationDiverged(SeliError, ArithmeticError):
    pass


class DegenerateQuadratic(SeliError, ArithmeticError):
    pass


class NotConverged(SeliError, RuntimeError):
    """Raised when the sweep iteration exhausts its budget.

    ``solution`` holds the best iterate found and ``history`` the residual
    of every iteration.
    """

    def __init__(self, message, solution=None, history=()):
        super().__init__(message)
        self.solution = solution
        self.history = list(history)


class InvalidPopulation(SeliError, ValueError):
    pass


class StepTooLarge(SeliError, ValueError):
    pass


class GridMismatch(SeliError, ValueError):
    pass


class CalibrationFailed(SeliError, RuntimeError):
    def __init__(self, message, value=None, errors=()):
        super().__init__(message)
        self.value = value
        self.errors = list(errors)
