"""Exception hierarchy shared by every module in the package."""


class EPosteriorError(Exception):
    """Base class for all package errors."""


class DomainError(EPosteriorError, ValueError):
    """A parameter lies outside the open parameter domain of the model."""


class DataError(EPosteriorError, ValueError):
    """Observations are not valid for the family (e.g. bernoulli data not in {0, 1})."""


class BoundaryError(EPosteriorError, ValueError):
    """The maximum likelihood estimate sits on or beyond the boundary of the domain."""


class ConfigurationError(EPosteriorError, ValueError):
    """Incompatible or invalid construction parameters."""


class NumericError(EPosteriorError, ArithmeticError):
    """A numerical routine failed to bracket or converge."""


class ExperimentAborted(EPosteriorError, RuntimeError):
    """A Monte-Carlo experiment could not produce a meaningful result."""
