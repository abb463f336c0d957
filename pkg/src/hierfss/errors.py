"""Exception types shared across the package.

The CLI maps ``DomainError`` to exit code 2 and ``NumericalFailure`` to 3.
"""


class DomainError(ValueError):
    """An argument lies outside the region where an operation is defined."""


class NumericalFailure(RuntimeError):
    """A numerical procedure did not reach its target accuracy."""
