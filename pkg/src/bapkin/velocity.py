"""Velocity quadrature on [-1, 1] with dmu = dv/2, and the uniform slab mesh.

The velocity rule is a double Gauss-Legendre rule: one rule on [-1, 0] and one
on [0, 1].  Half-range brackets are then plain partial sums and no node ever
sits on v = 0.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np


class Side(enum.Enum):
    """Which half of the velocity line is the incoming set V-(x).

    On the slab (0, 1) with omega(x, v) = (2x - 1) v, points left of 1/2 have
    V- = {v > 0} and points right of 1/2 have V- = {v < 0}.
    """

    PLUS = 1
    MINUS = -1

    @property
    def opposite(self) -> "Side":
        return Side.MINUS if self is Side.PLUS else Side.PLUS


def half_sign(x: float) -> Side:
    """Incoming side at position ``x``; the flip point x = 1/2 counts as PLUS."""
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x = {x} outside [0, 1]")
    return Side.PLUS if x <= 0.5 else Side.MINUS


@dataclass(frozen=True)
class VelocityGrid:
    nodes: np.ndarray
    weights: np.ndarray
    plus: np.ndarray = field(repr=False)
    minus: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return self.nodes.size

    @property
    def n_half(self) -> int:
        return self.nodes.size // 2

    def mask(self, side: Side) -> np.ndarray:
        """Boolean mask of the V- node set for ``side``."""
        return self.plus if side is Side.PLUS else self.minus


def build_grid(n_half: int) -> VelocityGrid:
    """Double Gauss rule with ``n_half`` nodes per half interval.

    Nodes are ordered increasingly, negative half first, so that node ``k`` and
    node ``2*n_half - 1 - k`` are mirror images.
    """
    if int(n_half) != n_half or n_half < 2:
        raise ValueError(f"n_half must be an integer >= 2, got {n_half!r}")
    n_half = int(n_half)
    x, w = np.polynomial.legendre.leggauss(n_half)
    # [-1, 1] -> [0, 1] halves the weights; dmu = dv/2 halves them again.
    vp = 0.5 * (x + 1.0)
    wp = 0.25 * w
    nodes = np.concatenate([-vp[::-1], vp])
    weights = np.concatenate([wp[::-1], wp])
    nodes.flags.writeable = False
    weights.flags.writeable = False
    plus = nodes > 0
    minus = ~plus
    plus.flags.writeable = False
    minus.flags.writeable = False
    return VelocityGrid(nodes, weights, plus, minus)


def _check(phi: np.ndarray, grid: VelocityGrid) -> np.ndarray:
    phi = np.asarray(phi, dtype=float)
    if phi.shape[-1] != grid.size:
        raise ValueError(
            f"velocity axis has length {phi.shape[-1]}, grid has {grid.size} nodes"
        )
    return phi


def bracket(phi, grid: VelocityGrid):
    """<phi> = integral of phi over [-1, 1] against dv/2 (last axis is velocity)."""
    return _check(phi, grid) @ grid.weights


def bracket_half(phi, side: Side, grid: VelocityGrid):
    """<phi>_{V-} over the incoming half selected by ``side``."""
    phi = _check(phi, grid)
    return phi @ np.where(grid.mask(side), grid.weights, 0.0)


@dataclass(frozen=True)
class SpatialMesh:
    """Uniform mesh of [0, 1].

    ``interfaces`` are the n_cells + 1 grid nodes, walls included; ``centers``
    are the cell midpoints.  With an even cell count x = 1/2 is a node.
    """

    n_cells: int

    def __post_init__(self):
        if int(self.n_cells) != self.n_cells or self.n_cells < 2 or self.n_cells % 2:
            raise ValueError(f"n_cells must be an even integer >= 2, got {self.n_cells!r}")

    @property
    def dx(self) -> float:
        return 1.0 / self.n_cells

    @property
    def interfaces(self) -> np.ndarray:
        return np.arange(self.n_cells + 1) * self.dx

    @property
    def centers(self) -> np.ndarray:
        return (np.arange(self.n_cells) + 0.5) * self.dx

    @property
    def center_sides(self) -> list[Side]:
        return [half_sign(x) for x in self.centers]
