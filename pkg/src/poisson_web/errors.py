"""Exception types shared by all modules."""


class ParameterError(ValueError):
    """Invalid model or experiment parameter (non-positive intensity, bad window, ...)."""


class DomainError(ValueError):
    """Input outside the domain of an operation (empty path set, unresolved region, ...)."""


class HorizonExhausted(RuntimeError):
    """The sampled field ends before a mother could be found.

    Callers recover by extending the field upward and retrying.
    """


class BoundaryEscape(RuntimeError):
    """A tracked path entered the horizontal safety margin of a finite field."""
