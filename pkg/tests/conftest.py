import numpy as np
import pytest

from bapkin import Equilibrium, SpatialMesh, build_grid
from bapkin.bap import BapConfig, BoundaryData, benchmark_boundary

ACCEPTANCE_LINES: list[str] = []


def make_cfg(eps, n_cells=100, n_half=8, t_end=0.4, eq=None, boundary=None, f_init=None):
    grid = build_grid(n_half) if eq is None else eq.grid
    eq = Equilibrium.uniform(grid) if eq is None else eq
    kw = {} if f_init is None else {"f_init": f_init}
    return BapConfig(
        eps=eps,
        mesh=SpatialMesh(n_cells),
        grid=grid,
        eq=eq,
        boundary=benchmark_boundary() if boundary is None else boundary,
        t_end=t_end,
        **kw,
    )


def random_inflow(rng, scale=1.0):
    a, b, c = rng.normal(size=3) * scale
    return BoundaryData(lambda t, v: a + b * v + c * v * v, lambda t, v: c - a * v)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
