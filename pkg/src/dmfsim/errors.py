class DmfError(Exception):
    """Base class for package errors."""


class ParameterError(DmfError, ValueError):
    pass


class UnsupportedCouplerError(DmfError, ValueError):
    pass


class ResourceGuardError(DmfError, ValueError):
    pass


class RangeError(DmfError, ValueError):
    pass


class MisuseError(DmfError, ValueError):
    pass


class AbortedPathError(DmfError, RuntimeError):
    """A simulated path left the finite range; ``time`` is where it happened."""

    def __init__(self, message: str, time: float):
        super().__init__(message)
        self.time = time


class ThinningError(DmfError, RuntimeError):
    """The thinning majorant was exceeded, so the simulated law would be wrong."""


class InequalityViolation(DmfError, AssertionError):
    pass


class ConfigError(DmfError, ValueError):
    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
