"""Shared exception types."""


class CapabilityError(RuntimeError):
    """Requested operation exceeds a documented capability cap (dimension, degree, ...)."""


class GridError(ValueError):
    """Grid fails a precondition (too coarse, too small, asymmetric, over the memory guard)."""
