"""Exception types shared across the package."""


class NumericalError(RuntimeError):
    """A computation failed to reach its requested accuracy."""


class QuadratureError(NumericalError):
    """Adaptive quadrature did not converge.

    The best available estimate and its achieved error are kept on the
    exception so callers can decide whether to use them anyway.
    """

    def __init__(self, message, estimate=None, error=None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error
