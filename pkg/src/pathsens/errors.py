"""Exception hierarchy shared across the package."""


class PathSensError(Exception):
    """Base class for all errors raised by pathsens."""


class ModelError(PathSensError, ValueError):
    """A model violates one of its structural invariants."""


class NetworkFormatError(ModelError):
    """A network definition file is malformed."""


class CountOverflow(ModelError):
    """Binomial propensity factor does not fit in a signed 64-bit integer."""


class AbsoluteContinuityViolation(PathSensError):
    """Exactly one of two compared rates/probabilities is zero."""


class ZeroPropensity(PathSensError):
    """Log-gradient requested for a channel whose propensity is zero."""


class UnboundedGrowthGuard(PathSensError):
    """An SSA run exceeded its jump cap."""


class NonFiniteState(PathSensError):
    """An Euler-Maruyama step produced a non-finite coordinate."""


class SingularDiffusion(PathSensError):
    """The diffusion matrix could not be inverted at a visited state."""


class DivisionByNearZero(PathSensError):
    """A relative difference was requested against a near-zero denominator."""
