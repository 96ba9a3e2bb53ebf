class ModelError(ValueError):
    """Invalid parameters, unmet preconditions or a malformed configuration."""


class NumericalError(RuntimeError):
    """A numerical procedure failed (divergence, no bracket, low acceptance)."""
