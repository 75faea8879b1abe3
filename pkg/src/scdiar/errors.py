"""Exception hierarchy shared by every module.

The CLI maps each class to a process exit code through ``exit_code``.
"""


class DiarError(Exception):
    exit_code = 1

    def __init__(self, message: str, line: int | None = None, source: str | None = None):
        self.line = line
        self.source = source
        prefix = ""
        if source is not None:
            prefix += f"{source}:"
        if line is not None:
            prefix += f"line {line}:"
        super().__init__(f"{prefix} {message}" if prefix else message)


class ParseError(DiarError, ValueError):
    """Malformed input text; ``line`` is 1-based."""

    exit_code = 2


class ValidationError(DiarError, ValueError):
    """Well-formed input that violates a domain invariant."""

    exit_code = 3


class ComputationError(DiarError, ArithmeticError):
    exit_code = 3


class UsageError(DiarError, ValueError):
    exit_code = 4


class ConfigurationError(DiarError, ValueError):
    exit_code = 4


class MetricUndefined(DiarError):
    exit_code = 1
