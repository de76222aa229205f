"""Reference solvers: a resolved explicit kinetic scheme and the limiting heat equation."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from .bap import BapConfig, march

# f at cell centres; the explicit reference is a plain cell-centred finite volume scheme


@dataclass(frozen=True)
class KineticField:
    f: np.ndarray  # (n_cells, Nv)
    time: float = 0.0

    def density(self, weights: np.ndarray) -> np.ndarray:
        return self.f @ weights


@dataclass(frozen=True)
class DiffusionField:
    rho0: np.ndarray  # interior nodes
    time: float
    dirichlet: tuple[float, float]


def kinetic_dt(cfg: BapConfig, safety: float = 0.9) -> float:
    """Largest monotone step times ``safety``: dt (v_max/(eps dx) + 1/eps^2) <= 1."""
    vmax = float(np.max(np.abs(cfg.grid.nodes)))
    rate = vmax / (cfg.eps * cfg.mesh.dx) + 1.0 / cfg.eps**2
    return safety / rate


def initial_field(cfg: BapConfig) -> KineticField:
    f = np.asarray(cfg.f_init(cfg.mesh.centers, cfg.grid.nodes), dtype=float)
    return KineticField(f.copy(), 0.0)


def wall_fluxes(f: np.ndarray, cfg: BapConfig, t: float) -> np.ndarray:
    """Upwind numerical fluxes v f at the n_cells + 1 mesh nodes."""
    v = cfg.grid.nodes
    n = f.shape[0]
    fb_left = cfg.boundary.sample(t, "left", cfg.grid)
    fb_right = cfg.boundary.sample(t, "right", cfg.grid)
    upstream = np.empty((n + 1, v.size))
    pos = v > 0
    # v > 0 takes the value on the left of the node, v < 0 the value on the right
    upstream[1:-1] = np.where(pos, f[:-1], f[1:])
    upstream[0] = np.where(pos, fb_left, f[0])
    upstream[-1] = np.where(pos, f[-1], fb_right)
    return v * upstream


def explicit_kinetic_step(field: KineticField, cfg: BapConfig, dt: float) -> KineticField:
    """Forward Euler, upwind transport plus explicit relaxation (1/eps^2)(<f>E - f)."""
    eps, dx = cfg.eps, cfg.mesh.dx
    vmax = float(np.max(np.abs(cfg.grid.nodes)))
    if dt * (vmax / (eps * dx) + 1.0 / eps**2) > 1.0 + 1e-12:
        raise ValueError(f"dt = {dt:.3g} violates the explicit stability bound")
    f = field.f
    F = wall_fluxes(f, cfg, field.time)
    rho = f @ cfg.grid.weights
    collision = (np.outer(rho, cfg.eq.values) - f) / eps**2
    f_new = f - (dt / eps) * (F[1:] - F[:-1]) / dx + dt * collision
    if not np.all(np.isfinite(f_new)):
        raise FloatingPointError(f"non-finite kinetic field at t = {field.time + dt:.6g}")
    return KineticField(f_new, field.time + dt)


def run_explicit(cfg: BapConfig, times: Sequence[float] | None = None, dt: float | None = None):
    """March the explicit scheme; returns (snapshots, dt, steps)."""
    times = [cfg.t_end] if times is None else sorted(times)
    dt = kinetic_dt(cfg) if dt is None else dt
    snaps, steps = march(
        initial_field(cfg), lambda s, h: explicit_kinetic_step(s, cfg, h), dt, times
    )
    return snaps, dt, steps


def diffusion_solve(
    initial, dirichlet: tuple[float, float], kappa_abs: float, t_end: float, dt: float
) -> DiffusionField:
    """Backward Euler for rho_t = kappa_abs rho_xx on the interior nodes of [0, 1].

    ``initial`` holds the values at x_i = i/(n+1), i = 1..n; the two Dirichlet
    values sit on the walls.
    """
    if not kappa_abs > 0:
        raise ValueError("kappa_abs must be positive")
    rho = np.array(initial, dtype=float)
    n = rho.size
    dx = 1.0 / (n + 1)
    a, b = map(float, dirichlet)
    r = kappa_abs / dx**2
    t = 0.0
    while t < t_end - 1e-12 * max(1.0, t_end):
        h = min(dt, t_end - t)
        bands = np.empty((3, n))
        bands[0] = bands[2] = -h * r
        bands[1] = 1.0 + 2.0 * h * r
        rhs = rho.copy()
        rhs[0] += h * r * a
        rhs[-1] += h * r * b
        rho = solve_banded((1, 1), bands, rhs)
        t += h
        if not np.all(np.isfinite(rho)):
            raise FloatingPointError(f"non-finite diffusion solution at t = {t:.6g}")
    return DiffusionField(rho, t, (a, b))
