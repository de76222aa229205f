"""Classical micro/macro scheme f = rho E + g, with an artificial wall closure.

Same staggering and time stepping as :mod:`bapkin.bap`, but the projector is
the full-range Pi phi = <phi> E and rho itself is the macroscopic unknown.
Its wall values are not determined by inflow data, so the scheme has to invent
them; here rho at each wall is copied from the nearest interior node.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .bap import BapConfig, RunResult, march, stable_dt
from .transport import Equilibrium

WALL_CLOSURE = "zero-order extrapolation: rho_wall = rho at the nearest interior node"


@dataclass(frozen=True)
class ClassicalState:
    rho: np.ndarray  # interior nodes
    g: np.ndarray  # midpoints, <g> = 0
    time: float = 0.0


def classical_relaxation_solve(rhs, lam: float, eq: Equilibrium) -> np.ndarray:
    """Solve g - lam (I - Pi) L g = rhs, i.e. (1 + lam) g - lam <g> E = rhs."""
    rhs = np.asarray(rhs, dtype=float)
    mean = rhs @ eq.grid.weights
    return (rhs + lam * np.asarray(mean)[..., None] * eq.values) / (1.0 + lam)


def wall_rho(state: ClassicalState) -> tuple[float, float]:
    return float(state.rho[0]), float(state.rho[-1])


def wall_g(state: ClassicalState, cfg: BapConfig) -> tuple[np.ndarray, np.ndarray]:
    """Incoming g = f_b - rho_wall E at each wall (outgoing entries are zero)."""
    grid, E = cfg.grid, cfg.eq.values
    left, right = wall_rho(state)
    gl = np.where(grid.plus, cfg.boundary.sample(state.time, "left", grid) - left * E, 0.0)
    gr = np.where(grid.minus, cfg.boundary.sample(state.time, "right", grid) - right * E, 0.0)
    return gl, gr


def initial_state(cfg: BapConfig) -> ClassicalState:
    w = cfg.grid.weights
    v = cfg.grid.nodes
    f_nodes = np.asarray(cfg.f_init(cfg.mesh.interfaces[1:-1], v), dtype=float)
    f_mid = np.asarray(cfg.f_init(cfg.mesh.centers, v), dtype=float)
    g = f_mid - np.outer(f_mid @ w, cfg.eq.values)
    return ClassicalState(f_nodes @ w, g, 0.0)


def step_classical(state: ClassicalState, cfg: BapConfig, dt: float) -> ClassicalState:
    eps, dx = cfg.eps, cfg.mesh.dx
    v, w, E = cfg.grid.nodes, cfg.grid.weights, cfg.eq.values
    g = state.g
    n = g.shape[0]

    rho_l, rho_r = wall_rho(state)
    rho_nodes = np.concatenate([[rho_l], state.rho, [rho_r]])
    grad = np.diff(rho_nodes) / dx

    gl, gr = wall_g(state, cfg)
    left = np.vstack([gl, g[:-1]])
    right = np.vstack([g[1:], gr])
    h_left = np.full(n, dx)
    h_right = np.full(n, dx)
    h_left[0] = h_right[-1] = 0.5 * dx
    transport = np.where(v > 0, v * (g - left) / h_left[:, None], v * (right - g) / h_right[:, None])
    q = transport + np.outer(grad, v * E)
    q -= np.outer(q @ w, E)
    lam = dt / eps**2
    g_new = classical_relaxation_solve(g, lam, cfg.eq) - (dt / eps / (1.0 + lam)) * q

    flux = (v * g_new) @ w
    rho_new = state.rho - (dt / eps) * (flux[1:] - flux[:-1]) / dx
    if not (np.all(np.isfinite(rho_new)) and np.all(np.isfinite(g_new))):
        raise FloatingPointError(f"non-finite values at t = {state.time + dt:.6g}")
    return ClassicalState(rho_new, g_new, state.time + dt)


def constraint_residual(state: ClassicalState, cfg: BapConfig) -> float:
    return float(np.max(np.abs(state.g @ cfg.grid.weights)))


def run_classical(cfg: BapConfig, times: Sequence[float] | None = None) -> RunResult:
    times = [cfg.t_end] if times is None else sorted(times)
    dt = stable_dt(cfg.eps, cfg.mesh, cfg.eq, cfg.cfl_sigma)
    state = initial_state(cfg)
    worst = [constraint_residual(state, cfg)]

    def monitor(s):
        worst[0] = max(worst[0], constraint_residual(s, cfg))

    snaps, steps = march(state, lambda s, h: step_classical(s, cfg, h), dt, times, monitor)
    return RunResult(snaps, dt, steps, worst[0], list(times))
