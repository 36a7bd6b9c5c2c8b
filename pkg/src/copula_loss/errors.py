"""Exception hierarchy.

The CLI maps these onto exit codes: configuration problems exit with 2,
numerical failures with 3 and bad input data with 4.
"""


class CopulaLossError(Exception):
    """Base class for all library errors."""

    exit_code = 3


class DomainError(CopulaLossError, ValueError):
    """An argument lies outside the domain of the operation."""

    exit_code = 2


class ConfigError(CopulaLossError, ValueError):
    """Inconsistent model or contract configuration."""

    exit_code = 2


class ResourceError(CopulaLossError):
    """The requested computation exceeds a hard size limit."""

    exit_code = 2


class NumericError(CopulaLossError, ArithmeticError):
    """A numerical routine failed to meet its accuracy contract."""

    exit_code = 3


class DegenerateConditioningError(NumericError):
    """Conditioning event has (numerically) zero probability density."""


class CalibrationError(CopulaLossError):
    """No admissible parameter vector could be found."""

    exit_code = 3


class DataError(CopulaLossError, ValueError):
    """Input data is empty, malformed or degenerate."""

    exit_code = 4
