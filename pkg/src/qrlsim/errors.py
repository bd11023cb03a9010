"""Exception hierarchy."""


class QRLError(Exception):
    """Base class for all package errors."""


class StateError(QRLError, ValueError):
    """Invalid input to a statevector operation."""


class ImpossibleBranchError(QRLError):
    """A forced measurement outcome has (numerically) zero probability."""


class ProtocolOrderError(QRLError):
    """Protocol steps or records are in an inconsistent order."""


class NotProductStateError(QRLError):
    """Agent and environment are entangled; use positive_correlation instead."""


class ConfigError(QRLError, ValueError):
    """Malformed or invalid run configuration."""

    def __init__(self, message: str, line: int | None = None, key: str | None = None):
        self.line = line
        self.key = key
        where = f"line {line}: " if line is not None else ""
        super().__init__(where + message)


class InvariantViolation(QRLError):
    """A numerical invariant (normalization, probability sum) failed at run time."""
