"""Gauge integrals of vector-lattice-valued functions on [0, 1]."""

from .errors import GaugeLatticeError, InvalidInput, PreconditionViolation, Unsupported
from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "GaugeLatticeError",
    "InvalidInput",
    "PreconditionViolation",
    "Unsupported",
    "__version__",
]
