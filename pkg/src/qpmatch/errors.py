"""Exception hierarchy."""


class QpmError(Exception):
    """Base class for package errors."""


class ParameterError(QpmError, ValueError):
    """An argument violates an operation's precondition."""


class CoordinateError(QpmError, IndexError):
    """A coordinate lies outside the string it indexes."""


class ShapeError(QpmError, ValueError):
    """Operands disagree in dimension or bit width."""


class ContractError(QpmError):
    """Input violates a caller contract that was detected at run time."""


class SizeError(QpmError):
    """Instance too large for an exhaustive routine."""


class SieveInvariantError(QpmError, AssertionError):
    """A sieve stage produced a label with non-zero bits in a zeroed block."""


class RecoveryError(QpmError):
    """Shift recovery could not assemble a full-rank parity system."""

    def __init__(self, message: str, round_index: int | None = None):
        super().__init__(message)
        self.round_index = round_index


class FormatError(QpmError, ValueError):
    """A file does not follow the expected on-disk format."""
