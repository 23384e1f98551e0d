"""Probability currents in open quantum systems, exercised on a dissipative
two-qutrit rotor coupled to two thermal baths."""

from .master_eq import BathParams, Generator, LindbladTerm, build_classical, build_global, build_local
from .numerics import NumericalError
from .rotor import RotorParams

__version__ = "0.1.0"

__all__ = [
    "BathParams",
    "Generator",
    "LindbladTerm",
    "NumericalError",
    "RotorParams",
    "build_classical",
    "build_global",
    "build_local",
    "__version__",
]
