"""Exception types shared across the package."""


class TrotterKitError(Exception):
    """Base class for all package errors."""


class ConfigurationError(TrotterKitError, ValueError):
    """Inconsistent inputs, e.g. series with different truncation degrees."""


class DomainError(TrotterKitError, ValueError):
    """An argument lies outside the domain of an operation."""


class NonLieComponentError(TrotterKitError, ArithmeticError):
    """A degree component is not spanned by the commutator basis."""

    def __init__(self, degree, residual, norm):
        self.degree = degree
        self.residual = residual
        self.norm = norm
        super().__init__(
            f"degree-{degree} component has non-Lie residual {residual:.3e} "
            f"(component norm {norm:.3e})"
        )


class SchemeValidationError(TrotterKitError, ValueError):
    """A scheme record violates one of its invariants.

    ``invariant`` names the violated rule, e.g. ``"ramp-sum"`` or ``"order"``.
    """

    def __init__(self, invariant, message):
        self.invariant = invariant
        super().__init__(f"[{invariant}] {message}")


class OptimizationError(TrotterKitError, RuntimeError):
    """An optimization run failed to produce a usable result."""
