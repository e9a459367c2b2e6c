"""Exception hierarchy shared by every occupancy module."""


class OccupancyError(Exception):
    """Base class for all errors raised by this package."""


class ParameterDomainError(OccupancyError, ValueError):
    """A parameter lies outside the domain of the operation."""


class DivergenceError(OccupancyError, ValueError):
    """A frequency specification does not have finite total mass."""


class SchemeMismatchError(OccupancyError, ValueError):
    """A fixed-n operation was requested for an unnormalized model."""


class AccuracyError(OccupancyError, ArithmeticError):
    """A truncated evaluation could not meet the requested error bound."""


class DegenerateVarianceError(OccupancyError, ArithmeticError):
    """The variance is below the numeric floor needed by the operation."""


class DepthExhaustedError(OccupancyError, RuntimeError):
    """Sampling hit mass that lies beyond the materialization cap."""


class UnsupportedSpecError(OccupancyError, ValueError):
    """A slowly varying factor has no derivable transform in the log-power family."""


class GuardExceededError(OccupancyError, ValueError):
    """An enumeration or dynamic program would exceed its size guard."""


class InsufficientReplicationsError(OccupancyError, ValueError):
    """An experiment needs more replications than were configured."""
