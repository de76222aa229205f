"""One-group collision operator L f = <f> E - f and its stiff implicit solve."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .velocity import Side, VelocityGrid, bracket, bracket_half


@dataclass(frozen=True)
class Equilibrium:
    """Equilibrium profile E(v) sampled on a velocity grid.

    Must be positive with <E> = 1 and <v E> = 0.
    """

    grid: VelocityGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.grid.size,):
            raise ValueError("equilibrium must have one value per velocity node")
        if np.any(values <= 0):
            raise ValueError("equilibrium must be positive")
        mass = bracket(values, self.grid)
        flux = bracket(self.grid.nodes * values, self.grid)
        if abs(mass - 1.0) > 1e-12 or abs(flux) > 1e-12:
            raise ValueError(f"need <E> = 1 and <vE> = 0, got {mass!r}, {flux!r}")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @classmethod
    def uniform(cls, grid: VelocityGrid) -> "Equilibrium":
        return cls(grid, np.ones(grid.size))

    @classmethod
    def normalized(cls, grid: VelocityGrid, profile) -> "Equilibrium":
        """Rescale a positive, even ``profile`` to unit mass."""
        profile = np.asarray(profile, dtype=float)
        return cls(grid, profile / bracket(profile, grid))

    def half_mass(self, side: Side) -> float:
        """<E>_{V-} for the given incoming side."""
        return float(bracket_half(self.values, side, self.grid))


def apply_L(f, eq: Equilibrium) -> np.ndarray:
    """L f = <f> E - f along the last axis."""
    f = np.asarray(f, dtype=float)
    return bracket(f, eq.grid)[..., None] * eq.values - f


def pseudo_inverse_L(h, eq: Equilibrium, tol: float = 1e-10) -> np.ndarray:
    """Inverse of L on mean-zero functions (it is simply -h)."""
    h = np.asarray(h, dtype=float)
    mean = bracket(h, eq.grid)
    if np.any(np.abs(mean) > tol):
        raise ValueError(f"L is only invertible on mean-zero data, got <h> = {mean}")
    return -h


def diffusion_coefficient(eq: Equilibrium) -> float:
    """kappa = <v L^{-1}(v E)>; negative, and -1/3 for E = 1."""
    v = eq.grid.nodes
    return float(bracket(v * pseudo_inverse_L(v * eq.values, eq), eq.grid))


def incoming_masks(side, grid: VelocityGrid, rows: int | None = None) -> np.ndarray:
    """V- masks, one row per entry of ``side`` (or a single row for one Side)."""
    if isinstance(side, Side):
        m = grid.mask(side)
        return m if rows is None else np.broadcast_to(m, (rows, grid.size))
    return np.array([grid.mask(s) for s in side])


def relaxation_solve(rhs, lam: float, side: Side | Sequence[Side], eq: Equilibrium) -> np.ndarray:
    """Solve g - lam * [L g - (E/<E>_{V-}) <L g>_{V-}] = rhs.

    The operator in brackets equals -g + (E/<E>_{V-}) <g>_{V-}, so the V-
    bracket of the solution equals that of ``rhs`` and the rest follows by
    back-substitution.  ``rhs`` may be a batch of shape (n, Nv) with one side
    per row.
    """
    rhs = np.asarray(rhs, dtype=float)
    lam = float(lam)
    if not np.isfinite(lam) or lam < 0:
        raise ValueError(f"lambda must be finite and non-negative, got {lam}")
    grid = eq.grid
    masks = incoming_masks(side, grid, None if rhs.ndim == 1 else rhs.shape[0])
    w_in = np.where(masks, grid.weights, 0.0)
    s = np.sum(rhs * w_in, axis=-1)
    a = np.sum(eq.values * w_in, axis=-1)
    assert np.all(a > 0), "empty incoming set"
    coef = (lam / (1.0 + lam)) * s / a
    return rhs / (1.0 + lam) + np.asarray(coef)[..., None] * eq.values
