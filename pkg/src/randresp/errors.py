"""Exception types shared across the package."""


class ConfigurationError(Exception):
    """Invalid parameters, malformed config, or missing derivative data."""


class NumericalError(Exception):
    """Root-finder / quadrature / linear-solve failure.

    Carries a ``detail`` dict with residuals or last iterates when available.
    """

    def __init__(self, message, detail=None):
        super().__init__(message)
        self.detail = detail or {}


class ModelError(Exception):
    """The discretized operator does not look like a Markov operator
    (e.g. dominant eigenvalue far from 1)."""

    def __init__(self, message, detail=None):
        super().__init__(message)
        self.detail = detail or {}


class UnsupportedOperation(Exception):
    """Operation not available for this basis/representation."""
