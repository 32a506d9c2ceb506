"""Exception hierarchy shared by all satprecode modules."""


class SatPrecodeError(Exception):
    """Base class for all library errors."""


class InvalidArgumentError(SatPrecodeError, ValueError):
    """An argument is outside its documented domain."""


class InvalidGeometryError(InvalidArgumentError):
    """Geometry produces an undefined channel (e.g. zero slant distance)."""


class DimensionMismatchError(InvalidArgumentError):
    """Matrix or vector shapes do not agree."""


class DegenerateChannelError(SatPrecodeError):
    """The channel carries no energy (all-zero average channel)."""


class SingularChannelError(SatPrecodeError):
    """The channel does not have the rank required by the precoder."""


class InsufficientFeedsError(SatPrecodeError):
    """Fewer feeds than beams for a precoder that needs N >= K."""


class InstanceTooLargeError(InvalidArgumentError):
    """Problem exceeds the size caps of a small-instance solver."""


class SolverFailureError(SatPrecodeError):
    """An iterative solver did not converge.

    Attributes
    ----------
    diagnostics : dict
        Solver state at the point of failure (iteration counts, gaps, ...).
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class ConfigError(InvalidArgumentError):
    """A configuration document failed validation.

    The message always starts with the dotted key path of the offending
    entry so the CLI can print it as a single machine-parsable line.
    """

    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key
