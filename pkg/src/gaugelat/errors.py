"""Exception types shared by every module."""


class GaugeLatticeError(Exception):
    """Base class for library errors."""


class InvalidInput(GaugeLatticeError, ValueError):
    """Malformed or inconsistent arguments (dimension mismatch, bad parameters...)."""


class PreconditionViolation(GaugeLatticeError, ValueError):
    """Arguments are well formed but an operation's precondition does not hold."""


class Unsupported(GaugeLatticeError, NotImplementedError):
    """Requested behaviour lies outside what the library can represent."""


class NonConvergence(GaugeLatticeError):
    """An integral did not converge; ``report`` carries the observed spreads."""

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report
