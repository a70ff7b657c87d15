"""Finite element toolkit for Laplace problems on rough domains."""
__version__ = "0.1.0"

from .errors import (
    AssemblyError, CompatibilityError, ConvergenceError, GeometryError, MeshError,
    PreconditionError, RoughLapError,
)

__all__ = [
    "AssemblyError", "CompatibilityError", "ConvergenceError", "GeometryError", "MeshError",
    "PreconditionError", "RoughLapError", "__version__",
]
