"""E-posteriors: e-variable based uncertainty quantification and risk bounds."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    BoundaryError,
    ConfigurationError,
    DataError,
    DomainError,
    EPosteriorError,
    ExperimentAborted,
    NumericError,
)

__all__ = [
    "__version__",
    "BoundaryError",
    "ConfigurationError",
    "DataError",
    "DomainError",
    "EPosteriorError",
    "ExperimentAborted",
    "NumericError",
]
