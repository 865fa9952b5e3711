"""Exception hierarchy shared by every module of the package."""


class PMLayersError(Exception):
    """Base class for all package errors."""


class DomainError(PMLayersError, ValueError):
    """An argument lies outside the admissible range (e.g. eps too large)."""


class QuadratureError(PMLayersError):
    """An improper integral failed to converge within its budget."""


class GeometryError(PMLayersError, ValueError):
    """Layer positions violate a spacing constraint."""


class NoSolutionError(PMLayersError):
    """A bracket for a scalar equation could not be established."""


class StiffnessError(PMLayersError):
    """The time step fell below dt_min."""


class NewtonError(PMLayersError):
    """Newton iteration failed after the maximum number of step halvings."""


class BackwardRegimeError(PMLayersError):
    """A cell entered the backward-diffusion regime eps^2 |u_x| > kappa."""


class EmptySetError(PMLayersError, ValueError):
    """A Hausdorff distance was requested with an empty interface set."""


class ConfigError(PMLayersError, ValueError):
    """Invalid experiment configuration; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


class InsufficientEventsError(PMLayersError):
    """A timing-law family member reached its horizon without a collapse."""
