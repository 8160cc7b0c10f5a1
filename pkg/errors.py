"""
Errors Module
Exception hierarchy shared by the library and the command line.
"""

from typing import Optional


class RigscanError(Exception):
    """Base class for every error raised on purpose by rigscan."""

    pass


class DomainError(RigscanError, ValueError):
    """A parameter violates the domain of an operation."""

    def __init__(self, message: str, invariant: Optional[str] = None):
        super().__init__(message)
        self.invariant = invariant


class HexParseError(DomainError):
    """A hex-float string does not follow the grammar."""

    def __init__(self, text: str, token: str):
        super().__init__(f"cannot parse hex float {text!r}: bad token {token!r}")
        self.text = text
        self.token = token


class OracleBudgetError(RigscanError):
    """The exact oracle would enumerate more items than allowed."""

    def __init__(self, required: int, budget: int):
        super().__init__(
            f"oracle refused: needs {required} compositions, budget is {budget}"
        )
        self.required = required
        self.budget = budget


class ConfigError(RigscanError, ValueError):
    """Invalid configuration (environment or command line)."""

    pass
