"""Shared exception types."""


class CapExceededError(RuntimeError):
    """An instance is too large for exact enumeration under the configured cap."""


class ConvergenceError(RuntimeError):
    """An iterative solver failed to reach its tolerance within the iteration cap."""
