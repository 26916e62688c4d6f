"""Shared exception types."""


class PlastiqError(Exception):
    """Base class for all package errors."""


class NotSPD(PlastiqError):
    """Matrix is not symmetric positive definite."""


class NotIsochoric(PlastiqError):
    """A plastic strain violates det = 1 beyond tolerance."""

    def __init__(self, message, element=None):
        super().__init__(message)
        self.element = element


class GrowthViolation(PlastiqError):
    """An energy density violates its declared growth bounds."""

    def __init__(self, message, matrix=None):
        super().__init__(message)
        self.matrix = matrix


class EmptySet(PlastiqError):
    """A point set required to be non-empty is empty."""


class DegenerateElement(PlastiqError):
    """A mesh element (or its image) has near-zero area."""

    def __init__(self, message, element=None):
        super().__init__(message)
        self.element = element


class CNViolation(PlastiqError):
    """The Ciarlet-Necas injectivity condition fails."""


class InvalidEpsilon(PlastiqError):
    """epsilon outside (0, 1]."""


class InvalidDelta(PlastiqError):
    """delta must be positive."""


class ProjectionStall(PlastiqError):
    """Isochoric projection failed to reach tolerance."""


class SolverFailure(PlastiqError):
    """Incremental solve failed; carries the failing knot index."""

    def __init__(self, message, knot=None):
        super().__init__(message)
        self.knot = knot


class ScenarioError(PlastiqError):
    """Malformed or inconsistent scenario configuration."""


class NonConvergenceWarning(UserWarning):
    """Iterative estimate hit its iteration cap; value is best-so-far."""
