"""Exception types shared across the package."""


class WulffkitError(Exception):
    """Base class for all library errors."""


class ConfigurationError(WulffkitError, ValueError):
    """Invalid construction parameters (grid size, solver settings, specs)."""


class DomainError(WulffkitError, ValueError):
    """A mathematical precondition failed (convexity, CAMC, sign of Lambda).

    ``direction`` and ``value`` identify the worst offending node when known.
    """

    def __init__(self, message, direction=None, value=None):
        super().__init__(message)
        self.direction = direction
        self.value = value


class RangeError(WulffkitError, ValueError):
    """A probe loop leaves the valid region of its chart."""


class ProbeError(WulffkitError, RuntimeError):
    """The tensor field degenerates on a probe loop (eigendirection undefined)."""


class UndersampledError(WulffkitError, RuntimeError):
    """Successive line-field samples jump by more than pi/4."""


class IndexResolutionError(WulffkitError, RuntimeError):
    """A winding sum is not close enough to a half-integer."""
