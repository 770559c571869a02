"""Equilibrium measures, limit shapes and Metropolis sampling for two-exponent weighted plane partitions."""

from .errors import MBShapeError
from .io import code_version

__version__ = code_version()

__all__ = ["MBShapeError", "__version__"]
