"""Exception hierarchy shared by the library and the command line."""


class LrcovError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ParseError(LrcovError, ValueError):
    """Malformed input file; the message names the offending row/column."""

    exit_code = 1


class ConfigError(LrcovError, ValueError):
    """Invalid parameter combination or input that fails validation."""

    exit_code = 2


class NumericalError(LrcovError, ArithmeticError):
    """Factorization or eigensolver failure."""

    exit_code = 3


class ConstructionError(NumericalError):
    """A simulation design produced a matrix that is not positive definite."""
