"""Exception types shared across the package."""


class Euler2DError(Exception):
    """Base class for all library errors."""


class BadArgument(Euler2DError):
    """An argument is outside the documented domain of an operation."""


class InvalidFunction(Euler2DError):
    """A user-supplied scalar function returned a non-finite value."""


class DivergentIntegral(Euler2DError):
    """A tail integral required to converge was classified as divergent."""


class EnvelopeFailure(Euler2DError):
    """Envelope calibration left sample points above the candidate envelope."""


class TierRequired(Euler2DError):
    """The operation needs a growth bound of a higher tier than supplied."""


class SingularPoint(Euler2DError):
    """Kernel evaluated at its singularity."""


class EmptyField(Euler2DError):
    """A particle field with no particles was passed where one is required."""


class HypothesisViolation(Euler2DError):
    """A theorem hypothesis checked at runtime does not hold for the inputs."""


class BlowUp(Euler2DError):
    """Non-finite state encountered during time integration.

    Carries the simulation time at which the first non-finite value appeared.
    """

    def __init__(self, message: str, time: float):
        super().__init__(message)
        self.time = time


class InvalidConfig(Euler2DError):
    """A scenario configuration failed validation."""
