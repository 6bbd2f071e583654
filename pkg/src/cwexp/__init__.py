"""Simulation and verification tools for cw-expansive surface homeomorphisms.

Covers the hyperbolic toral automorphism (2,1;1,1), an area-preserving
perturbation of it with infinitely many fixed points near the origin, and
the quotient of the torus by the antipodal involution (a 2-sphere).
"""

from cwexp.errors import (
    DomainError,
    GeometryError,
    InvalidContinuumError,
    PreconditionError,
    ResourceError,
    UnwrapError,
)

__version__ = "0.1.0"

__all__ = [
    "DomainError",
    "GeometryError",
    "InvalidContinuumError",
    "PreconditionError",
    "ResourceError",
    "UnwrapError",
]
