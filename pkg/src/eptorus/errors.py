"""Exception types shared across the package."""


class EPError(Exception):
    """Base class for package errors."""


class NanDetected(EPError, FloatingPointError):
    """A time-stepping stage produced a non-finite value."""


class InvalidHypothesis(EPError, ValueError):
    """Data does not satisfy the slope hypothesis g0 < -sqrt(2) E."""


class MarginUnreachable(EPError, ValueError):
    """No admissible number of modes reaches the requested margin."""


class NotInvariant(EPError, ValueError):
    """Snapshots are not invariant in the directions orthogonal to the profile."""


class ConfigError(EPError, ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class FormatError(EPError, ValueError):
    """Snapshot header or payload is malformed."""
