# errors.py
# Exception types raised across the package


class RydbergError(Exception):
    """Base class for every error raised by rydberg_dressing."""


class DomainError(RydbergError, ValueError):
    """An argument lies outside the domain where a formula is defined."""


class PreconditionError(RydbergError, ValueError):
    """Inputs are valid individually but the operation cannot proceed."""


class CapacityError(RydbergError, ValueError):
    """A dense or state-vector dimension cap would be exceeded."""


class ConfigError(RydbergError, ValueError):
    """A run configuration could not be parsed or validated."""


class NumericError(RydbergError, ArithmeticError):
    """A numerical routine failed to converge or broke an invariant."""

    def __init__(self, message: str, index=None):
        super().__init__(message)
        self.index = index


class SingularityError(RydbergError, ArithmeticError):
    """Evaluation hit the antiblockade resonance."""


class ContrastLossError(RydbergError, ArithmeticError):
    """The mean collective spin vanished, so squeezing is undefined."""
