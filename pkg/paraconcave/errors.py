"""
Exception hierarchy for paraconcave.

Every error raised by the library derives from ParaconcaveError and from the
builtin that best describes it, so callers may catch either.
"""
from typing import Optional, Tuple


class ParaconcaveError(Exception):
    """Base class for all paraconcave errors"""
    pass


class DimensionMismatchError(ParaconcaveError, ValueError):
    """Raised when array or point dimensions disagree"""
    pass


class NegativeInputError(ParaconcaveError, ValueError):
    """Raised when a mean receives a negative entry"""
    pass


class InvalidWeightsError(ParaconcaveError, ValueError):
    """Raised when weights are not a point of the open simplex"""
    pass


class DomainError(ParaconcaveError, ValueError):
    """Raised for an invalid domain description"""
    pass


class OutsideDomainError(ParaconcaveError, ValueError):
    """Raised when a point lies outside the closed domain"""
    pass


class GridTooCoarseError(ParaconcaveError, ValueError):
    """Raised when the grid spacing cannot resolve the domain"""
    pass


class SourceSpecError(ParaconcaveError, ValueError):
    """Raised for undeclared source kinds or out-of-range source parameters"""
    pass


class SolverError(ParaconcaveError, RuntimeError):
    """Raised when a time stepping or linear solve fails"""
    pass


class MonotonicityError(SolverError):
    """Raised when the epsilon-regularized solutions are not ordered"""
    pass


class StagnationError(SolverError):
    """Raised when a fixed-point iteration stops making progress"""
    pass


class InterpolationError(ParaconcaveError, ValueError):
    """Raised for queries outside the space-time grid"""
    pass


class EmptySampleError(ParaconcaveError, ValueError):
    """Raised when no admissible sample could be drawn"""
    pass


class ExponentUndefinedError(ParaconcaveError, ValueError):
    """Raised when a scaling fit meets vanishing values"""
    pass


class BracketError(ParaconcaveError, ValueError):
    """Raised when a bisection bracket has no sign change"""
    pass


class ExponentDomainError(ParaconcaveError, ValueError):
    """Raised when exponent formulas are used outside their hypotheses"""
    pass


class ToleranceError(ParaconcaveError, ValueError):
    """Raised when a verdict tolerance or tolerance constant is not positive"""
    pass


class ScenarioConfigError(ParaconcaveError, ValueError):
    """Raised for scenario files that fail to parse or validate"""

    def __init__(self, message: str, path: Optional[str] = None,
                 line: Optional[int] = None, column: Optional[int] = None,
                 key: Optional[Tuple] = None):
        self.path = path
        self.key = key
        self.line = line
        self.column = column
        location = ""
        if path is not None:
            location = str(path)
            if line is not None:
                location += f":{line}"
                if column is not None:
                    location += f":{column}"
            location += ": "
        super().__init__(f"{location}{message}")
        self.reason = message
