"""Exception types shared across the package."""


class InvalidArgument(ValueError):
    """An argument lies outside the domain of the operation."""


class OutOfDomain(InvalidArgument):
    """The requested quantity diverges at the given argument."""


class UnphysicalModel(ValueError):
    """Model parameters would produce negative output power."""


class InsufficientData(ValueError):
    """Too few usable data points for the requested estimate."""


class InconsistentOccupancy(ValueError):
    """Corrected occupancy is negative beyond its uncertainty."""


class FitNotConverged(RuntimeError):
    """Iterative fit stopped without meeting its tolerance.

    The last iterate is attached as ``result``.
    """

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result
