"""
Exception hierarchy shared by every charcov module.

The CLI maps these onto exit codes: invalid input is 2, an exceeded
resource cap is 3.
"""

from typing import Optional


class CharcovError(Exception):
    """Base class for all charcov failures."""


class InvalidInputError(CharcovError, ValueError):
    """Input is malformed or outside an operation's domain."""


class DegenerateFormError(InvalidInputError):
    """The bilinear form has determinant zero."""


class ConfigError(InvalidInputError):
    """A CHARCOV_* environment setting could not be parsed."""


class GramParseError(InvalidInputError):
    """A Gram file or structured Gram input failed validation."""

    def __init__(self, message: str, line: Optional[int] = None, field: Optional[str] = None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field '{field}'")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


class CapExceededError(CharcovError, RuntimeError):
    """A configured resource cap was exceeded."""


class ConsistencyError(CharcovError, AssertionError):
    """An internal cross-check that the mathematics guarantees has failed."""
