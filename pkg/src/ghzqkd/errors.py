"""Exception hierarchy shared by every module."""

from __future__ import annotations


class GhzQkdError(Exception):
    """Base class for all package errors."""


class InvalidArgument(GhzQkdError, ValueError):
    pass


class QubitNotFound(GhzQkdError, KeyError):
    def __str__(self) -> str:
        return f"qubit not in state: {self.args[0]!r}" if self.args else "qubit not in state"


class PreconditionViolation(GhzQkdError):
    pass


class InvalidState(GhzQkdError):
    """The register does not have the structure an operation requires."""


class ProtocolExhausted(GhzQkdError):
    """Alice has no GHZ qubit left to teleport with."""


class ResetFailed(GhzQkdError):
    """Reset could not restore the uniform GHZ state within its bound.

    ``attempts`` holds the attempts made before giving up.
    """

    def __init__(self, message: str, attempts=()):
        super().__init__(message)
        self.attempts = list(attempts)


class ChannelAbort(GhzQkdError):
    """Retransmission cap reached on the quantum channel."""

    def __init__(self, message: str, transmissions: int):
        super().__init__(message)
        self.transmissions = transmissions


class InvalidSequence(GhzQkdError):
    pass


class InvalidReport(GhzQkdError, ValueError):
    pass


class ConfigError(GhzQkdError, ValueError):
    """Bad scenario configuration; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None, source: str | None = None):
        self.line = line
        self.source = source
        where = ""
        if source is not None and line is not None:
            where = f"{source}:{line}: "
        elif line is not None:
            where = f"line {line}: "
        elif source is not None:
            where = f"{source}: "
        super().__init__(where + message)
