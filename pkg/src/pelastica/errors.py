"""Exception hierarchy shared by every module and mapped to CLI exit codes."""


class PElasticaError(Exception):
    """Base class for library errors."""


class InputError(PElasticaError, ValueError):
    """Malformed or inconsistent input (exit code 2)."""


class DomainError(InputError):
    """Argument outside the mathematical domain of an operation."""


class UnsupportedError(InputError):
    """Operation not defined for the given ambient dimension."""


class GluingError(InputError):
    """Pieces cannot be concatenated in a C^1 fashion."""


class NumericalError(PElasticaError, RuntimeError):
    """A numerical procedure failed to converge (exit code 3)."""


class LocationError(NumericalError):
    """A perturbed joint could not be located inside its search window."""


class GeometryError(NumericalError):
    """Constraint projection failed to converge."""


class IndexTooSmallError(InputError):
    """Perturbation index too small for the construction to fit."""


class ResolutionError(InputError):
    """Discretisation too coarse for the curve."""
