"""Design, optimize and benchmark splitting schemes for exp(h(A + B))."""

from .errors import (
    ConfigurationError,
    DomainError,
    NonLieComponentError,
    OptimizationError,
    SchemeValidationError,
    TrotterKitError,
)
from .lie_series import TruncatedSeries, build_commutator_basis, series_exp, series_log
from .scheme_core import (
    LEAPFROG,
    ErrorCoefficients,
    TrotterScheme,
    compute_error_coefficients,
    scheme_log,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigurationError",
    "DomainError",
    "ErrorCoefficients",
    "LEAPFROG",
    "NonLieComponentError",
    "OptimizationError",
    "SchemeValidationError",
    "TrotterKitError",
    "TrotterScheme",
    "TruncatedSeries",
    "build_commutator_basis",
    "compute_error_coefficients",
    "scheme_log",
    "series_exp",
    "series_log",
]
