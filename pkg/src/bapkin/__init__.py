"""Boundary-matching micro/macro schemes for the one-group transport equation."""

from .velocity import Side, SpatialMesh, VelocityGrid, bracket, bracket_half, build_grid, half_sign
from .transport import (
    Equilibrium,
    apply_L,
    diffusion_coefficient,
    pseudo_inverse_L,
    relaxation_solve,
)

__all__ = [
    "Side",
    "SpatialMesh",
    "VelocityGrid",
    "bracket",
    "bracket_half",
    "build_grid",
    "half_sign",
    "Equilibrium",
    "apply_L",
    "diffusion_coefficient",
    "pseudo_inverse_L",
    "relaxation_solve",
]

__version__ = "0.1.0"
