"""The ten acceptance criteria, each reported as one PASS/FAIL line."""

import time
from functools import cache

import numpy as np
import pytest

from bapkin import Equilibrium, Side, bap, build_grid, classical, harness, reference
from bapkin.bap import constant_boundary
from bapkin.chandrasekhar import solve_h
from bapkin.half_maxwellian import (
    full_moments,
    half_line_quadrature,
    half_moments,
    invert_half_moments,
    project_half,
)
from bapkin.harness import RunConfig
from conftest import ACCEPTANCE_LINES, make_cfg, random_inflow
from test_bap import admissible_state, dense_bap_step
from test_classical import dense_classical_step
from test_half_maxwellian import quad_half_moments, rel_err, sweep
from test_transport import dense_stiff_operator, peaked

WALL_VALUE = 0.71043


def record(n, ok, detail):
    line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


@cache
def bap_run(eps):
    t0 = time.perf_counter()
    prof = harness.simulate(RunConfig(scheme="bap", eps=eps, t_end=0.4))
    prof.meta["wall_time"] = time.perf_counter() - t0
    return prof


@cache
def explicit_reference(eps):
    return harness.simulate(RunConfig(scheme="explicit", eps=eps, t_end=0.4, n_cells=1000))


@cache
def diffusion_reference():
    cfg = RunConfig(scheme="diffusion", t_end=0.4, n_cells=1000, dirichlet=(WALL_VALUE, 0.0))
    return harness.simulate(cfg)


def test_criterion_01_chandrasekhar_value():
    t0 = time.perf_counter()
    value = harness.chandrasekhar_command(64, 1e-10)
    elapsed = time.perf_counter() - t0
    table = solve_h(64, 1e-10)
    a0 = abs(table.moment(0) - 2.0)
    a1 = abs(table.moment(1) - 2.0 / np.sqrt(3.0))
    ok = abs(value - WALL_VALUE) <= 5e-4 and a0 <= 1e-6 and a1 <= 1e-6 and elapsed < 1.0
    record(1, ok, f"rho(0) = {value:.7f}, |a0 - 2| = {a0:.1e}, |a1 - 2/sqrt3| = {a1:.1e}, {elapsed:.3f} s")


@pytest.mark.parametrize("eps", [1.0, 0.5, 0.2])
def test_criterion_02_kinetic_regime(eps):
    rep = harness.compare_profiles(bap_run(eps), explicit_reference(eps))
    record(2, rep.linf_error <= 2e-2, f"eps = {eps}: Linf vs explicit reference = {rep.linf_error:.4f} (<= 0.02)")


def test_criterion_03_transition_regime():
    rep = harness.compare_profiles(bap_run(0.05), explicit_reference(0.05))
    record(3, rep.linf_error <= 2e-2, f"eps = 0.05: Linf vs explicit reference = {rep.linf_error:.4f} (<= 0.02)")


def test_criterion_04_diffusion_regime():
    prof = bap_run(1e-4)
    rep = harness.compare_profiles(prof, diffusion_reference(), harness.DEFAULT_WINDOW)
    first = prof.rho[0]
    rel = abs(first - WALL_VALUE) / WALL_VALUE
    ok = rep.linf_error <= 1e-2 and rel <= 0.02
    record(
        4,
        ok,
        f"eps = 1e-4: interior Linf = {rep.linf_error:.4f} (<= 0.01), "
        f"first node rho = {first:.5f} ({100 * rel:.2f}% from {WALL_VALUE}, <= 2%), "
        f"{prof.meta['steps']} steps",
    )


def test_criterion_05_uniform_in_eps():
    finite = True
    worst_min = np.inf
    steps = set()
    for eps in (1e-2, 1e-4, 1e-6, 1e-8):
        prof = bap_run(eps)
        finite &= bool(np.all(np.isfinite(prof.rho)))
        worst_min = min(worst_min, prof.rho.min())
        steps.add(prof.meta["steps"]) if eps < 1e-2 else None
    gap = np.max(np.abs(bap_run(1e-6).rho - bap_run(1e-8).rho))
    ok = finite and worst_min >= -1e-10 and len(steps) == 1 and gap <= 1e-6
    record(
        5,
        ok,
        f"all runs finite = {finite}, min rho = {worst_min:.2e}, steps = {sorted(steps)}, "
        f"Linf(eps=1e-6 vs 1e-8) = {gap:.2e} (<= 1e-6)",
    )


def test_criterion_06_exactness_oracles():
    rng = np.random.default_rng(6)
    grid = build_grid(4)
    eq = Equilibrium.normalized(grid, 1.0 + grid.nodes**2)
    worst_bap = worst_cls = 0.0
    for eps in (1.0, 1e-3):
        for _ in range(10):
            cfg = make_cfg(eps, n_cells=8, eq=eq, boundary=random_inflow(rng))
            dt = bap.stable_dt(eps, cfg.mesh, eq)
            s = admissible_state(cfg, rng)
            new = bap.step(s, cfg, dt)
            r_ref, g_ref = dense_bap_step(s, cfg, dt)
            worst_bap = max(worst_bap, rel_err(new.g, g_ref), rel_err(new.rho, r_ref))
            g = rng.normal(size=(8, grid.size))
            g -= np.outer(g @ grid.weights, eq.values)
            cs = classical.ClassicalState(rng.normal(size=7), g, 0.0)
            new = classical.step_classical(cs, cfg, dt)
            r_ref, g_ref = dense_classical_step(cs, cfg, dt)
            worst_cls = max(worst_cls, rel_err(new.g, g_ref), rel_err(new.rho, r_ref))
    worst_solve = 0.0
    for case in range(100):
        grid = build_grid(int(rng.integers(2, 10)))
        eqc = peaked(grid) if case % 2 else Equilibrium.uniform(grid)
        side = Side.PLUS if case % 3 else Side.MINUS
        lam = 10.0 ** rng.uniform(-4, 5)
        rhs = rng.normal(size=grid.size)
        dense = np.linalg.solve(np.eye(grid.size) - lam * dense_stiff_operator(eqc, side), rhs)
        worst_solve = max(worst_solve, rel_err(bap.relaxation_solve(rhs, lam, side, eqc), dense))
    ok = worst_bap <= 1e-12 and worst_cls <= 1e-12 and worst_solve <= 1e-10
    record(6, ok, f"BAP step {worst_bap:.1e}, classical step {worst_cls:.1e} (<= 1e-12); relaxation solve {worst_solve:.1e} (<= 1e-10)")


def test_criterion_07_structural_invariants():
    grid = build_grid(8)
    eq = Equilibrium.normalized(grid, 1.0 + grid.nodes**2)
    cfg = make_cfg(
        1e-6, n_cells=20, eq=eq, boundary=constant_boundary(1.0, eq),
        f_init=lambda x, v: np.tile(eq.values, (np.size(x), 1)),
    )
    s = bap.initial_state(cfg)
    s1 = bap.step(s, cfg, bap.stable_dt(cfg.eps, cfg.mesh, eq))
    fixed = max(np.max(np.abs(s1.rho - 1.0)), np.max(np.abs(s1.g)))

    residual = max(bap_run(e).meta["max_constraint_residual"] for e in (1.0, 0.5, 0.2, 0.05, 1e-2, 1e-4, 1e-6, 1e-8))

    kcfg = make_cfg(0.05, n_cells=100)
    field = reference.initial_field(kcfg)
    dt = reference.kinetic_dt(kcfg)
    w, dx = kcfg.grid.weights, kcfg.mesh.dx
    balance = 0.0
    for _ in range(200):
        F = reference.wall_fluxes(field.f, kcfg, field.time)
        new = reference.explicit_kinetic_step(field, kcfg, dt)
        dm = (new.density(w).sum() - field.density(w).sum()) * dx
        balance = max(balance, abs(dm + (dt / kcfg.eps) * (F[-1] @ w - F[0] @ w)))
        field = new
    ok = fixed <= 1e-14 and residual <= 1e-10 and balance <= 1e-12
    record(7, ok, f"equilibrium drift {fixed:.1e} (<= 1e-14), max |<g>_V-| {residual:.1e} (<= 1e-10), mass balance {balance:.1e} (<= 1e-12)")


def test_criterion_08_half_maxwellian_suite():
    oracle = trip = partition = 0.0
    for p in sweep(150, seed=8):
        for side in Side:
            hm = half_moments(p, side).moments.as_array()
            ref = quad_half_moments(p, side)
            oracle = max(oracle, np.max(np.abs(hm - ref) / np.abs(ref)))
            trip = max(trip, rel_err(invert_half_moments(half_moments(p, side)).as_array(), p.as_array()))
        total = half_moments(p, Side.PLUS).moments + half_moments(p, Side.MINUS).moments
        partition = max(partition, rel_err(total.as_array(), full_moments(p).as_array()))
    rng = np.random.default_rng(8)
    idem = annihil = 0.0
    for p in sweep(40, seed=9):
        for side in Side:
            nodes, weights = half_line_quadrature(p, side)
            a, b, c = rng.normal(size=3)
            s = np.sqrt(p.T)
            phi = (a + b * np.sin(nodes / s) + c * np.cos(2 * nodes / s)) * p(nodes)
            once = project_half(phi, nodes, weights, p, side)
            twice = project_half(once.values, nodes, weights, p, side)
            scale = max(1.0, np.max(np.abs(once.values)))
            idem = max(idem, np.max(np.abs(twice.values - once.values)) / scale)
            powers = np.vstack([np.ones_like(nodes), nodes, nodes**2])
            ref = np.maximum(1.0, powers @ (weights * np.abs(phi)))
            annihil = max(annihil, np.max(np.abs(powers @ (weights * (phi - once.values))) / ref))
    ok = oracle <= 1e-11 and trip <= 1e-9 and idem <= 1e-10 and annihil <= 1e-10 and partition <= 1e-13
    record(
        8,
        ok,
        f"quadrature oracle {oracle:.1e}, round trip {trip:.1e}, idempotence {idem:.1e}, "
        f"annihilation {annihil:.1e}, partition {partition:.1e}",
    )


def test_criterion_09_reference_solvers():
    from test_reference import bump, ones

    n = 199
    x = np.arange(1, n + 1) / (n + 1)
    sol = reference.diffusion_solve(np.sin(np.pi * x), (0.0, 0.0), 1 / 3, 0.3, 1e-5)
    sine = np.max(np.abs(sol.rho0 - np.exp(-np.pi**2 * 0.3 / 3) * np.sin(np.pi * x)))

    a = 0.7

    def inflow(t, v):
        return 1.0 + a * v * np.exp(-t)

    cfg = make_cfg(1.0, n_cells=2, n_half=4, boundary=bap.BoundaryData(inflow, inflow),
                   f_init=lambda x, v: 1.0 + a * np.outer(np.ones_like(x), v), t_end=0.1)
    snaps, _, _ = reference.run_explicit(cfg, dt=1e-5)
    ode = np.max(np.abs(snaps[-1].f - (1.0 + a * np.exp(-0.1) * cfg.grid.nodes)))

    bd = bap.BoundaryData(ones, ones)

    def density(m):
        c = make_cfg(1.0, n_cells=m, boundary=bd, f_init=bump, t_end=0.2)
        return reference.run_explicit(c)[0][-1].density(c.grid.weights)

    fine = density(3200)
    errs = [np.mean(np.abs(density(m) - fine.reshape(m, -1).mean(axis=1))) for m in (50, 100, 200)]
    ratios = [errs[0] / errs[1], errs[1] / errs[2]]
    ok = sine <= 1e-4 and ode <= 1e-6 and all(1.7 <= r <= 2.3 for r in ratios)
    record(9, ok, f"sine decay {sine:.1e} (<= 1e-4), relaxation ODE {ode:.1e} (<= 1e-6), convergence ratios {ratios[0]:.2f}, {ratios[1]:.2f}")


def test_criterion_10_contrast_with_classical():
    cls = harness.simulate(RunConfig(scheme="classical", eps=1e-4, t_end=0.4))
    err_cls = abs(cls.rho[0] - WALL_VALUE)
    err_bap = abs(bap_run(1e-4).rho[0] - WALL_VALUE)
    record(10, err_cls > err_bap, f"first node error: classical {err_cls:.5f} > BAP {err_bap:.5f}")
