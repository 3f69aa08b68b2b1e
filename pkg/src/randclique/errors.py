"""Exception types shared across the package."""


class RandcliqueError(Exception):
    """Base class for errors raised by this package."""


class InvalidParameterError(RandcliqueError, ValueError):
    """An argument violates a documented precondition."""


class CapInsufficientError(RandcliqueError, RuntimeError):
    """A query needs diagram information beyond the weight cap in force."""


class CapEscalationError(RandcliqueError, RuntimeError):
    """The weight-cap retry protocol ran out of retries."""


class EmptyHistogramError(RandcliqueError, ValueError):
    """histogram() received an empty list of values."""
