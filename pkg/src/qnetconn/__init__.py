"""Physically weighted algebraic connectivity of QKD networks."""

__version__ = "0.1.0"

from qnetconn.errors import NumericalError, ValidationError  # noqa: E402

__all__ = ["NumericalError", "ValidationError", "__version__"]
