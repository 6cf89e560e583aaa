"""Weyl-Heisenberg (Gabor) integral quantization and metric regularization."""

from .errors import NumericalError, QuadratureError

__version__ = "0.1.0"

__all__ = ["NumericalError", "QuadratureError", "__version__"]
