"""Exception types shared across the package.

The CLI maps each family to its own exit code.
"""


class RRGRUError(Exception):
    """Base class for all package errors."""


class ShapeError(RRGRUError, ValueError):
    pass


class ContractError(RRGRUError, ValueError):
    """A documented precondition was violated by the caller."""


class NumericError(RRGRUError, ArithmeticError):
    """Non-finite values showed up where finite ones are required."""


class DataError(RRGRUError):
    """Malformed input file. Carries the path and line number when known."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}:{line}: " if line is not None else f"{path}: "
        elif line is not None:
            where = f"line {line}: "
        super().__init__(where + message)


class ParseError(DataError):
    pass


class LabelError(DataError):
    pass


class FormatError(DataError):
    pass


class ConfigError(RRGRUError):
    pass


class CheckpointError(RRGRUError):
    pass
