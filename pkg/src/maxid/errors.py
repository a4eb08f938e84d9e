"""Exception types raised across the package."""


class MaxIdError(Exception):
    """Base class for all errors raised by :mod:`maxid`."""


class InvalidParameters(MaxIdError, ValueError):
    """A parameter lies outside the domain of its family."""


class DimensionTooLarge(MaxIdError, ValueError):
    """The requested dimension exceeds what the routine supports."""


class NotPositiveSemidefinite(MaxIdError, ValueError):
    """A correlation matrix could not be factorized even after jitter."""


class NonConvergence(MaxIdError, RuntimeError):
    """An iterative routine stopped before meeting its tolerance."""


class NumericalDensityFailure(MaxIdError, ArithmeticError):
    """A likelihood term is numerically nonpositive beyond tolerance.

    Attributes
    ----------
    pair : tuple of int or None
        Site indices of the failing pair term, when known.
    replicate : int or None
        Row index of the failing replicate, when known.
    """

    def __init__(self, message, pair=None, replicate=None):
        super().__init__(message)
        self.pair = pair
        self.replicate = replicate


class DegenerateSeries(MaxIdError, ValueError):
    """A series of maxima is constant and cannot support a GEV fit."""


class OutOfSupport(MaxIdError, ValueError):
    """A value lies outside the support of a distribution."""


class SingularInformation(MaxIdError, ArithmeticError):
    """The sensitivity matrix of a composite likelihood is not invertible."""


class NonTermination(MaxIdError, RuntimeError):
    """A simulation loop exceeded its safety bound on the number of points."""


class MissingSite(MaxIdError, KeyError):
    """Site identifiers do not match across inputs."""


class ParseError(MaxIdError, ValueError):
    """An input file could not be parsed."""


class EmptyAfterFilter(MaxIdError, ValueError):
    """Filtering removed every observation."""


class EmptyLevel(MaxIdError, ValueError):
    """An empirical probability is 0 or 1 so the level carries no information."""


class ConfigError(MaxIdError, ValueError):
    """A configuration is invalid before any computation starts."""
