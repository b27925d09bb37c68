"""Exception types raised across the package."""


class MatconcError(Exception):
    """Base class for all package errors."""


class InvalidInputError(MatconcError, ValueError):
    """Malformed input: non-finite entries, wrong shapes, mismatched dims."""


class DomainError(MatconcError, ValueError):
    """Input outside the mathematical domain of an operation."""


class EvaluationError(MatconcError, ArithmeticError):
    """A numerical routine produced no usable value."""


class MatrixOverflowError(MatconcError, OverflowError):
    """Matrix function result exceeds the floating point range."""


class OracleCapError(MatconcError, RuntimeError):
    """Exact enumeration refused because the support is too large."""


class ConfigError(MatconcError, ValueError):
    """Experiment configuration failed validation."""
