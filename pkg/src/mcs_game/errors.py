"""Exception types shared across the package.

Every error also subclasses ValueError so callers that only care about
"bad input" can keep catching that.
"""

from typing import Optional


class McsGameError(Exception):
    """Base class for all package errors."""


class DomainError(McsGameError, ValueError):
    """Argument outside the domain of a function (ranges, sizes, indices)."""


class ConfigError(McsGameError, ValueError):
    """Invalid run or agent configuration."""


class ScoringError(McsGameError, ValueError):
    """A proposal cannot be scored (e.g. its cell region has no UEs)."""


class MalformedMessageError(McsGameError, ValueError):
    """A protocol message failed to decode or validate."""


class TableLoadError(McsGameError, ValueError):
    """MCS table file failed validation.

    Attributes:
        row: 1-based data-row number the problem was found on, if any
    """

    def __init__(self, message: str, row: Optional[int] = None) -> None:
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)
