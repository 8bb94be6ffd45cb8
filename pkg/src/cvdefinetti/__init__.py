"""Numerical toolkit for a biased-verification de Finetti reduction in continuous-variable systems."""

from .errors import (DeFinettiError, InvalidParameterError, NumericalConsistencyError,
                     SpectralRangeError, TruncationError)

__version__ = "0.1.0"

__all__ = [
    "DeFinettiError",
    "InvalidParameterError",
    "NumericalConsistencyError",
    "SpectralRangeError",
    "TruncationError",
    "__version__",
]
