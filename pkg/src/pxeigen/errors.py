"""Exception types raised by the package."""


class PxEigenError(Exception):
    """Base class for all package errors."""


class DomainError(PxEigenError, ValueError):
    """A point or node lies outside the domain it is evaluated on."""


class DegenerateDomainError(PxEigenError, ValueError):
    """The discretized domain has no interior or a vanishing inradius."""


class StencilError(PxEigenError, ValueError):
    """A finite-difference stencil would leave the closed domain."""


class ConfigError(PxEigenError, ValueError):
    """Invalid run configuration; ``path`` names the offending field."""

    def __init__(self, path, message):
        self.path = path
        self.message = message
        super().__init__(f"{path}: {message}")


class DataError(PxEigenError, ValueError):
    """Field data is unusable, e.g. contains non-finite values."""


class PreconditionError(PxEigenError, ValueError):
    """A diagnostic's standing assumption fails on the given data."""
