"""Exception types shared across the toolkit."""

from __future__ import annotations

__all__ = ["CapabilityError", "DomainError", "BudgetError", "RetryError"]


class CapabilityError(RuntimeError):
    """An operation needs a capability the model does not declare."""


class DomainError(ValueError):
    """A parameter value lies outside the model's plausible domain."""


class BudgetError(RuntimeError):
    """A sampling budget was exhausted before the request was met.

    Carries whatever partial diagnostics were available at failure time so
    callers can report them.
    """

    def __init__(self, message: str, **diagnostics):
        super().__init__(message)
        self.diagnostics = dict(diagnostics)


class RetryError(RuntimeError):
    """A resample-on-failure loop hit its retry cap."""
