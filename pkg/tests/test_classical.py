import numpy as np
import pytest

from bapkin import Equilibrium, build_grid
from bapkin import classical
from bapkin.bap import constant_boundary, stable_dt
from bapkin.classical import ClassicalState
from conftest import make_cfg, random_inflow


def dense_classical_step(state, cfg, dt):
    eq, grid = cfg.eq, cfg.grid
    v, w, E = grid.nodes, grid.weights, eq.values
    n, nv, dx, eps = cfg.mesh.n_cells, grid.size, cfg.mesh.dx, cfg.eps
    I = np.eye(nv)
    P = np.outer(E, w)
    g, rho, t = state.g, state.rho, state.time
    rho_l, rho_r = rho[0], rho[-1]
    rho_all = np.concatenate([[rho_l], rho, [rho_r]])
    fb_l = cfg.boundary.sample(t, "left", grid)
    fb_r = cfg.boundary.sample(t, "right", grid)
    g_wall_l = np.where(v > 0, fb_l - rho_l * E, 0.0)
    g_wall_r = np.where(v < 0, fb_r - rho_r * E, 0.0)
    up, down = np.diag((v > 0) * 1.0), np.diag((v < 0) * 1.0)
    D = np.diag(v)
    A = -(I - P)
    g_new = np.empty_like(g)
    for i in range(n):
        left = g_wall_l if i == 0 else g[i - 1]
        right = g_wall_r if i == n - 1 else g[i + 1]
        hl = 0.5 * dx if i == 0 else dx
        hr = 0.5 * dx if i == n - 1 else dx
        transport = up @ D @ (g[i] - left) / hl + down @ D @ (right - g[i]) / hr
        grad = (rho_all[i + 1] - rho_all[i]) / dx
        q = (I - P) @ (transport + grad * v * E)
        g_new[i] = np.linalg.solve(I - (dt / eps**2) * A, g[i] - (dt / eps) * q)
    flux = g_new @ (v * w)
    rho_new = rho - (dt / eps) * np.diff(flux) / dx
    return rho_new, g_new


@pytest.mark.parametrize("eps", [1.0, 1e-3])
def test_step_matches_dense_assembly(eps, rng):
    grid = build_grid(4)
    eq = Equilibrium.normalized(grid, 2.0 + grid.nodes**2)
    worst = 0.0
    for _ in range(10):
        cfg = make_cfg(eps, n_cells=8, eq=eq, boundary=random_inflow(rng))
        g = rng.normal(size=(8, grid.size))
        g -= np.outer(g @ grid.weights, eq.values)
        state = ClassicalState(rng.normal(size=7), g, float(rng.random()))
        dt = stable_dt(eps, cfg.mesh, eq)
        new = classical.step_classical(state, cfg, dt)
        rho_ref, g_ref = dense_classical_step(state, cfg, dt)
        scale = max(1.0, np.max(np.abs(g_ref)), np.max(np.abs(rho_ref)))
        worst = max(worst, np.max(np.abs(new.g - g_ref)) / scale, np.max(np.abs(new.rho - rho_ref)) / scale)
    assert worst <= 1e-12


def test_relaxation_solve_closed_form(rng):
    grid = build_grid(5)
    eq = Equilibrium.normalized(grid, 1.0 + grid.nodes**2)
    A = -(np.eye(grid.size) - np.outer(eq.values, grid.weights))
    for lam in (0.0, 0.3, 50.0, 1e4):
        rhs = rng.normal(size=grid.size)
        expected = np.linalg.solve(np.eye(grid.size) - lam * A, rhs)
        np.testing.assert_allclose(classical.classical_relaxation_solve(rhs, lam, eq), expected, atol=1e-11)


@pytest.mark.parametrize("eps", [1.0, 1e-6])
def test_equilibrium_is_a_fixed_point(eps):
    grid = build_grid(6)
    eq = Equilibrium.uniform(grid)

    def f_init(x, v):
        return 1.5 * np.ones((np.size(x), v.size))

    cfg = make_cfg(eps, n_cells=10, eq=eq, boundary=constant_boundary(1.5, eq), f_init=f_init)
    state = classical.initial_state(cfg)
    dt = stable_dt(eps, cfg.mesh, eq)
    for _ in range(5):
        state = classical.step_classical(state, cfg, dt)
    assert np.max(np.abs(state.rho - 1.5)) <= 1e-14
    assert np.max(np.abs(state.g)) <= 1e-14


def test_run_keeps_zero_mean_and_reports_closure():
    cfg = make_cfg(1e-3, t_end=0.01)
    res = classical.run_classical(cfg)
    assert res.max_constraint_residual <= 1e-12
    assert "rho_wall" in classical.WALL_CLOSURE
    assert classical.wall_rho(res.final) == (res.final.rho[0], res.final.rho[-1])
