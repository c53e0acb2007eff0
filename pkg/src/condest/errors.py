"""Semantic exception hierarchy shared by all condest modules."""


class CondestError(Exception):
    """Base class for all condest errors."""


class ConfigError(CondestError):
    """Invalid or inconsistent configuration (mismatched reference measures,
    bad experiment specs, zero-prior models, unknown keys)."""


class DomainError(CondestError):
    """An argument lies outside the mathematical domain of an operation."""


class NumericError(CondestError):
    """A numeric routine failed to reach its target tolerance."""

    def __init__(self, message: str, achieved: float | None = None):
        super().__init__(message)
        self.achieved = achieved


class CapacityError(CondestError):
    """A combinatorial object (pool, brute-force search) exceeds its cap."""


class PreconditionError(CondestError):
    """A documented estimator precondition was violated."""


class DegenerateFitError(CondestError):
    """Every candidate has likelihood zero; no maximizer exists."""
