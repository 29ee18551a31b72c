"""Numerical toolkit for toric potentials on Delzant polytopes.

Potentials are handled through their convex profiles ``F`` on R^n and the
Legendre transforms ``G`` on the polytope.
"""
from .config import RunConfig, Tolerances
from .convexfn import ConvexFunctionRep, DualFunction, legendre_transform
from .polytope import DelzantPolytope, parse_polytope
from .potentials import ToricPotential, gallery, parse_potential_spec

__version__ = "0.1.0"

__all__ = ["ConvexFunctionRep", "DelzantPolytope", "DualFunction", "RunConfig",
           "Tolerances", "ToricPotential", "gallery", "legendre_transform",
           "parse_polytope", "parse_potential_spec"]
