"""Exception hierarchy. Each family maps to one CLI exit code."""


class SimError(Exception):
    exit_code = 4


class ConfigError(SimError, ValueError):
    exit_code = 2


class ArgumentError(SimError, ValueError):
    exit_code = 2


class DimensionError(SimError, ValueError):
    exit_code = 4


class NumericError(SimError, ArithmeticError):
    exit_code = 4


class DataError(SimError, ValueError):
    exit_code = 3


class FormatError(DataError):
    """Malformed container file; ``offset`` is the byte position of the fault."""

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class MetricUndefinedError(DataError):
    pass


class ProtocolError(SimError, RuntimeError):
    exit_code = 4
