"""Exception hierarchy for the zratio package."""


class ZRatioError(Exception):
    """Base class for all package-specific errors."""


class DomainError(ZRatioError):
    """An argument lies outside the mathematical domain of an operation."""


class CapabilityError(ZRatioError):
    """The requested operation is not supported by this family or kernel."""


class IterationError(ZRatioError):
    """Fixed-point iteration failed to converge.

    Carries the last iterate in ``last``.
    """

    def __init__(self, message, last):
        super().__init__(message)
        self.last = last


class DegenerateEstimateError(ZRatioError):
    """All contributing weights were zero; no finite estimate exists."""


class CapacityError(ZRatioError):
    """An exact enumeration would exceed its configured budget."""


class AccuracyError(ZRatioError):
    """Numerical quadrature did not reach the requested tolerance.

    Carries the achieved estimate in ``estimate``.
    """

    def __init__(self, message, estimate):
        super().__init__(message)
        self.estimate = estimate


class ConfigError(ZRatioError):
    """An experiment spec or config file failed validation."""
