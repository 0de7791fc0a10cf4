"""Exception hierarchy shared by all modules.

The CLI maps ``ArgumentError`` (and subclasses) to exit code 2 and
``ResourceError`` / ``ConvergenceError`` to exit code 3.
"""


class DioboundError(Exception):
    """Base class for every error raised by this package."""


class ArgumentError(DioboundError, ValueError):
    """Invalid argument: wrong dimension, parameter out of range, bad file."""


class DomainError(ArgumentError):
    """Parameter outside the region where a formula is valid or convergent."""


class DegenerateSymbolError(ArgumentError):
    """The principal symbol vanishes identically."""


class GeometryError(ArgumentError):
    """A ball or erosion does not fit inside the domain mask."""


class EmptyInteriorError(GeometryError):
    """Erosion removed every interior cell."""


class ResolutionError(ArgumentError):
    """A grid is too coarse to resolve the frequencies an operation needs."""


class LogicError(DioboundError):
    """An operation was called on an object in the wrong state."""


class ResourceError(DioboundError):
    """A documented size cap was exceeded."""


class ConvergenceError(DioboundError):
    """An iterative solver did not converge."""

    def __init__(self, message, best_residual=float("nan")):
        super().__init__(message)
        self.best_residual = best_residual
