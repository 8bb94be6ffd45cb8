"""Exception hierarchy shared by all modules."""


class DeFinettiError(Exception):
    """Base class for every error raised by this package."""


class InvalidParameterError(DeFinettiError, ValueError):
    """A parameter violates an operation's precondition."""


class TruncationError(DeFinettiError):
    """The Fock cutoff is too small for the requested accuracy.

    ``suggested_dim`` carries a cutoff that is expected to work, when one can
    be estimated.
    """

    def __init__(self, message, suggested_dim=None):
        if suggested_dim is not None:
            message = f"{message} (try dim >= {suggested_dim})"
        super().__init__(message)
        self.suggested_dim = suggested_dim


class SpectralRangeError(DeFinettiError, ValueError):
    """A spectral window cuts the spectrum outside its reliable range."""


class NumericalConsistencyError(DeFinettiError):
    """Two independent numerical routes disagree beyond tolerance."""
