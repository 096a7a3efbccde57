"""Exception hierarchy and the CLI exit codes they map to."""

from __future__ import annotations

from typing import Sequence

EXIT_OK = 0
EXIT_VALIDATION_FAILED = 1
EXIT_CONFIG_ERROR = 2
EXIT_RESOURCE_REFUSED = 3


class BarloadError(Exception):
    """Base class for every error raised by barload."""


class InvalidArgumentError(BarloadError, ValueError):
    """A precondition on an argument does not hold."""


class ResourceLimitError(BarloadError):
    """A computation would exceed a configured size budget."""

    def __init__(self, message: str, required_bytes: int = 0, budget_bytes: int = 0):
        super().__init__(message)
        self.required_bytes = required_bytes
        self.budget_bytes = budget_bytes


class DefectiveMatrixError(BarloadError):
    """The generator is not diagonalizable within tolerance."""

    def __init__(self, message: str, clustered: Sequence[complex] = ()):
        super().__init__(message)
        self.clustered = list(clustered)


class DivergenceError(BarloadError):
    """An infinite-time integral has a non-decaying exponent."""


class BasisClosureError(BarloadError):
    """An operator maps a truncated Fock state outside the basis."""

    def __init__(self, message: str, state: tuple = ()):
        super().__init__(message)
        self.state = state


class OracleAccuracyError(BarloadError):
    """The master-equation integrator lost more probability than allowed."""


class ConfigError(BarloadError):
    """Configuration could not be parsed or validated."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class CacheMismatchError(BarloadError):
    """A tensor cache file was written for a different key."""


class SchemaVersionError(BarloadError):
    """An output file carries an unknown schema version."""
