"""Exception hierarchy.

Plain argument-validation failures raise ``ValueError``; the classes below
mark failures a caller may want to catch and recover from (fall back to a
different projection, widen a bracket, skip a seed).
"""


class CoevolveError(Exception):
    """Base class for library-specific failures."""


class ConfigurationError(CoevolveError, ValueError):
    """A run configuration is invalid (stability, grid consistency, keys)."""


class UnsupportedConfigurationError(CoevolveError, ValueError):
    """The operation is only defined for a specific layout (e.g. 601 sites)."""


class NoSolutionError(CoevolveError):
    """A template or root-finding problem has no root in the search bracket."""


class DegenerateError(CoevolveError):
    """The problem is ill-posed for the given data (e.g. zero phase, A == 1)."""


class EstimationFailedError(CoevolveError):
    """A statistical estimate could not be formed from the data."""
