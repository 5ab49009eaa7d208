"""Shared exception types."""


class QueryscoutError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(QueryscoutError):
    """Query text could not be parsed.

    Carries 1-based line/column of the offending token.
    """

    def __init__(self, message: str, line: int = 1, column: int = 1):
        super().__init__(f"{message} (line {line}, column {column})")
        self.message = message
        self.line = line
        self.column = column


class DialectError(QueryscoutError):
    """Name or construct not allowed by the query dialect."""


class FaultError(QueryscoutError):
    """Fault spec is invalid for the target topology."""


class ConfigError(QueryscoutError):
    """Dataset or training configuration is infeasible."""


class ExecutionError(QueryscoutError):
    """Query cannot be executed against the given logs."""


class ModelError(QueryscoutError):
    """Model bundle is missing, untrained, or inconsistent."""
