"""
Exception hierarchy for the ecodyn package.
"""
from typing import Any, Dict, Optional


class EcodynError(Exception):
    """Base exception for all ecodyn errors."""
    pass


class ConfigError(EcodynError):
    """Invalid model parameters, config file or command-line input."""
    pass


class NumericalError(EcodynError):
    """A numerical routine could not produce a trustworthy result."""
    pass


class DomainError(NumericalError, ValueError):
    """Function evaluated outside its mathematical domain."""
    pass


class ThresholdError(NumericalError):
    """A threshold formula has a non-positive denominator."""
    pass


class RootFindingError(NumericalError):
    """Bracketed root search failed."""

    def __init__(self, message: str, diagnostics: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}

    def __str__(self) -> str:
        if not self.diagnostics:
            return super().__str__()
        details = ", ".join(f"{k}={v}" for k, v in self.diagnostics.items())
        return f"{super().__str__()} ({details})"


class IntegrationError(NumericalError):
    """Step-size underflow or a state leaving the unit square."""
    pass


class InvalidBracketError(NumericalError):
    """Bisection bracket has the same outcome at both ends."""
    pass


class ComparisonError(EcodynError, ValueError):
    """Two time series cannot be compared (no overlapping range)."""
    pass
