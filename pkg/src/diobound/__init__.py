"""Lattice counts, sums of squares and eigenfunction sup-norm verification."""

from . import bounds, cutoff, eigen, lattice, numtheory, symbol
from .errors import (
    ArgumentError,
    ConvergenceError,
    DegenerateSymbolError,
    DioboundError,
    DomainError,
    EmptyInteriorError,
    GeometryError,
    LogicError,
    ResolutionError,
    ResourceError,
)

__version__ = "0.1.0"
