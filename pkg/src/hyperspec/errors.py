"""Exception hierarchy shared by all hyperspec modules."""


class HyperspecError(Exception):
    """Base class for every error raised by this package."""


class UsageError(HyperspecError, ValueError):
    """Invalid arguments or an operation applied to the wrong kind of object."""


class DomainError(HyperspecError, ValueError):
    """A point lies outside the open upper half-space (x_n <= 0)."""


class GeometryError(HyperspecError, ValueError):
    """Invalid geometric input: non-simple polygons, vertices off the half-space, ..."""


class DegenerateProblemError(HyperspecError):
    """The discrete problem has no degrees of freedom left after eliminating the boundary."""


class NumericalError(HyperspecError, ArithmeticError):
    """Factorization breakdown or failed eigensolver convergence."""
