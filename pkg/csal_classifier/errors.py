from __future__ import annotations


class CsalError(Exception):
    """Base class for every error raised by csal_classifier."""


class ValidationError(CsalError, ValueError):
    """Invalid input data, configuration or parameters."""


class DataFormatError(ValidationError):
    """A dataset file could not be parsed.

    ``row`` and ``column`` are 1-based positions in the file when a single
    cell is at fault, otherwise ``None``.
    """

    def __init__(self, message: str, row: int | None = None, column: int | None = None) -> None:
        super().__init__(message)
        self.row = row
        self.column = column


class ConvergenceError(CsalError, ArithmeticError):
    """A fit produced a non-finite likelihood or a singular covariance."""

    def __init__(self, message: str, iteration: int | None = None, component: int | None = None) -> None:
        super().__init__(message)
        self.iteration = iteration
        self.component = component


class DatasetUnavailableError(CsalError, OSError):
    """A named dataset had to be downloaded and could not be fetched."""
