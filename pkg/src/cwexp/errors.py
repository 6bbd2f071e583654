"""Exception types shared across the package."""


class DomainError(ValueError):
    """A point lies outside the domain of a chart or partial map."""


class InvalidContinuumError(ValueError):
    """An empty or otherwise unusable point set was given as a continuum."""


class GeometryError(ValueError):
    """Construction parameters violate a required geometric containment."""


class PreconditionError(ValueError):
    """Inputs of an experiment do not satisfy its hypotheses."""


class ResourceError(RuntimeError):
    """Chain refinement exceeded its point budget."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class UnwrapError(ValueError):
    """Nearest-lift unwrapping of a pseudo-orbit is ambiguous."""
