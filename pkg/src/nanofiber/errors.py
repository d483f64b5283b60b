"""Exception hierarchy shared by every module."""


class NanofiberError(Exception):
    """Base class for all package errors."""


class DomainError(NanofiberError, ValueError):
    """An argument lies outside the physical or mathematical domain of an operation."""


class SolverError(NanofiberError, RuntimeError):
    """A numerical refinement failed to converge."""

    def __init__(self, message, failures=None):
        super().__init__(message)
        self.failures = list(failures or [])


class NoBoundMinimum(DomainError):
    """The trap potential has no interior minimum with positive depth."""


class ConfigError(NanofiberError, ValueError):
    """A run configuration could not be parsed or validated."""
