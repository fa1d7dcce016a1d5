"""Exception hierarchy shared across the package."""


class PhaseLabError(Exception):
    """Base class for package errors."""


class DomainError(PhaseLabError, ValueError):
    """An argument lies outside the documented domain of an operation."""


class ConsistencyError(PhaseLabError, RuntimeError):
    """An internal numerical invariant was violated (e.g. a probability
    more negative than floating-point rounding can explain)."""


class DegeneratePosteriorError(PhaseLabError, RuntimeError):
    """Every grid node ended up with zero posterior weight."""


class ConfigError(PhaseLabError, ValueError):
    """A run configuration failed to parse or validate."""
