"""Exception hierarchy shared by every module."""


class SpecgapError(Exception):
    """Base class for all library errors."""


class DomainError(SpecgapError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class HypothesisViolation(SpecgapError):
    """A structural hypothesis on the collision kernel does not hold.

    Raised for instance when no positive lower bound ``c_phi`` exists, when
    ``c_b`` vanishes, or when the modified angular kernel is not
    non-increasing where monotonicity is required.
    """


class IntegrationError(SpecgapError):
    """The integrand produced a non-finite value at a quadrature node."""


class ResolutionError(SpecgapError):
    """A quadrature rule is too coarse to resolve the integrand."""


class QuadratureOrderError(SpecgapError):
    """Requested rule order exceeds the supported range."""


class EmptyComplementError(SpecgapError):
    """The truncated space contains nothing beyond the collision invariants."""
