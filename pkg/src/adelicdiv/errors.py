"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class AdelicError(Exception):
    """Base class for library errors."""


class RejectedInput(AdelicError, ValueError):
    """An argument violates an operation's precondition."""


class BudgetExceeded(AdelicError):
    """Exact coefficients grew past the configured size budget."""


class DegenerateEquation(AdelicError):
    """The equation f^n = a holds identically, so it has no divisor."""


class UnsupportedInput(AdelicError):
    """The input lies outside the supported data (e.g. irrational roots at a bad place)."""


class NumericalFailure(AdelicError):
    """A numerical routine did not converge; carries the best residual seen."""

    def __init__(self, message: str, residual: float = float("nan")):
        super().__init__(message)
        self.residual = residual


class CheckFailed(AdelicError):
    """An identity or inequality was violated beyond tolerance."""
