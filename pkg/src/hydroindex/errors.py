"""Exception hierarchy.

The CLI maps :class:`DataError` to exit code 2 and :class:`NumericalError`
to exit code 3.
"""

from __future__ import annotations


class HydroIndexError(Exception):
    """Base class for all package errors."""


class DataError(HydroIndexError, ValueError):
    """Input data violates a precondition."""


class MalformedRow(DataError):
    def __init__(self, line: int, detail: str):
        super().__init__(f"malformed row at line {line}: {detail}")
        self.line = line


class NegativeValue(DataError):
    def __init__(self, row: int, value: float):
        super().__init__(f"negative precipitation {value!r} at row {row}")
        self.row = row
        self.value = value


class DuplicateDate(DataError):
    def __init__(self, row: int, date):
        super().__init__(f"duplicate date {date} at row {row}")
        self.row = row
        self.date = date


class TooFewRows(DataError):
    pass


class AllZero(DataError):
    """Every value is zero, so the gamma component cannot be identified."""

    def __init__(self, message: str = "all values are zero", bin_index: int | None = None):
        if bin_index is not None:
            message = f"bin {bin_index}: {message}"
        super().__init__(message)
        self.bin_index = bin_index


class TooFewDistinct(DataError):
    def __init__(self, message: str, bin_index: int | None = None):
        if bin_index is not None:
            message = f"bin {bin_index}: {message}"
        super().__init__(message)
        self.bin_index = bin_index


class InsufficientData(DataError):
    def __init__(self, message: str, bins: list[int] | None = None):
        super().__init__(message)
        self.bins = bins or []


class NumericalError(HydroIndexError, ArithmeticError):
    """An iterative routine failed to produce a usable result."""
