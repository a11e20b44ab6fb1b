"""Exception hierarchy shared by all gtlab modules.

Each class maps to a distinct CLI exit code (see cli.EXIT_CODES).
"""


class GtlabError(Exception):
    """Base class for all gtlab errors."""


class DomainError(GtlabError):
    """Input outside the mathematical domain of an operation."""


class CapacityError(GtlabError):
    """Requested computation exceeds a declared enumeration/size guard."""


class PrecisionError(GtlabError):
    """High-precision result failed its certification check."""


class ConvergenceError(GtlabError):
    """An iterative solver failed to converge."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class InconclusiveError(GtlabError):
    """A statistical check could not resolve at the requested precision."""

    def __init__(self, message, estimates=None):
        super().__init__(message)
        self.estimates = estimates


class SingularDensityError(DomainError):
    """Quantile slope vanished; the implied density is singular."""


class PoleProximityError(DomainError):
    """Evaluation point too close to a pole or to the support."""


class InfeasibleFieldError(DomainError):
    """A triangle field has a cell with non-positive gradient."""

    def __init__(self, message, cell=None):
        super().__init__(message)
        self.cell = cell


class FlowError(ConvergenceError):
    """Compression-flow propagation failed."""
