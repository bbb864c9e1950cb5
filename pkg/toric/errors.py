"""
Exception hierarchy for toric-py.

Every error carries the name of the module that raised it so that the
command line front end can report ``[module] message`` and pick an exit
code from the exception type.
"""

from typing import List, Optional


class ToricError(Exception):
    """
    Base class for all toric-py errors.

    Attributes:
        module: Short name of the raising module (e.g. "geometry")
        message: Human readable description
    """

    def __init__(self, message: str, module: str = "toric") -> None:
        super().__init__(message)
        self.module = module
        self.message = message

    def __str__(self) -> str:
        return f"[{self.module}] {self.message}"


class GeometryError(ToricError, ValueError):
    """Input outside the domain of a geometric formula."""


class DimensionError(ToricError, ValueError):
    """Vector or operator dimensions do not match."""


class UnsupportedShapeError(ToricError, ValueError):
    """A phantom shape has no closed-form treatment."""


class FormatError(ToricError, ValueError):
    """A data file could not be parsed."""


class ConfigError(ToricError, ValueError):
    """An experiment configuration is invalid."""

    def __init__(
        self, message: str, module: str = "config", errors: Optional[List[str]] = None
    ) -> None:
        super().__init__(message, module)
        self.errors = list(errors or [])


class ConvergenceError(ToricError, ArithmeticError):
    """
    An iterative method diverged or broke down.

    Attributes:
        trace: Residual norms recorded up to the failure
    """

    def __init__(
        self, message: str, module: str = "solvers", trace: Optional[List[float]] = None
    ) -> None:
        super().__init__(message, module)
        self.trace = list(trace or [])
