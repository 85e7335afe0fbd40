class HeatCountError(Exception):
    """Base class for library errors."""


class InvalidDimensionError(HeatCountError, ValueError):
    pass


class ContractViolationError(HeatCountError, ValueError):
    pass


class UnsupportedRegimeError(HeatCountError, ValueError):
    pass


class QuadratureError(HeatCountError, RuntimeError):
    """Adaptive quadrature did not reach the requested tolerance.

    The best estimate and its error bound are kept on the exception so callers
    can decide whether the partial result is usable.
    """

    def __init__(self, message, estimate=None, error=None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


class PropagationWarning(UserWarning):
    """Propagation finished but may not meet the requested accuracy."""
