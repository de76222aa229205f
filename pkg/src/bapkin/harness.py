"""Experiment orchestration: config files, runs, comparisons and eps sweeps.

Configs are line-oriented ``key = value`` text.  A run writes a density CSV
(``x,rho,rho_bar`` or ``x,rho`` for the heat equation) and a ``.meta``
sidecar with every parameter plus dt, step count and the worst constraint
residual.
"""

from __future__ import annotations

import csv
import io
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import bap, classical, reference
from .chandrasekhar import milne_boundary_value, solve_h
from .transport import Equilibrium, diffusion_coefficient
from .velocity import SpatialMesh, build_grid, half_sign

SCHEMES = ("bap", "classical", "explicit", "diffusion")
CASES = ("paper", "constant", "zero")
DEFAULT_WINDOW = (0.05, 0.95)
DIFFUSION_DT = 1e-5  # backward Euler is unconditionally stable; dt only sets accuracy


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    scheme: str
    t_end: float
    eps: float = 1.0
    n_cells: int = 100
    n_half: int = 8
    cfl_sigma: float = 0.45
    case: str = "paper"
    constant_value: float = 1.0
    dirichlet: tuple[float, float] | None = None
    dt: float | None = None
    output_path: str = "rho.csv"

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ConfigError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.case not in CASES:
            raise ConfigError(f"case must be one of {CASES}, got {self.case!r}")
        for name in ("eps", "cfl_sigma"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if not self.t_end >= 0:
            raise ConfigError("t_end must be non-negative")
        if self.n_cells < 2 or self.n_cells % 2:
            raise ConfigError(f"n_cells must be an even integer >= 2, got {self.n_cells}")
        if self.n_half < 2:
            raise ConfigError("n_half must be at least 2")
        if self.dt is not None and not self.dt > 0:
            raise ConfigError("dt must be positive")
        if self.scheme == "diffusion" and self.dirichlet is None:
            raise ConfigError("scheme = diffusion needs a dirichlet pair")


_REQUIRED = ("scheme", "t_end")
_PARSERS = {
    "scheme": str,
    "case": str,
    "output_path": str,
    "eps": float,
    "t_end": float,
    "cfl_sigma": float,
    "constant_value": float,
    "dt": float,
    "n_cells": int,
    "n_half": int,
    "dirichlet": lambda s: tuple(float(p) for p in s.replace(",", " ").split()),
}


def _positive(v):
    return None if v > 0 else "must be positive"


_CHECKS = {
    "scheme": lambda v: None if v in SCHEMES else f"must be one of {', '.join(SCHEMES)}",
    "case": lambda v: None if v in CASES else f"must be one of {', '.join(CASES)}",
    "eps": _positive,
    "cfl_sigma": _positive,
    "dt": _positive,
    "t_end": lambda v: None if v >= 0 else "must be non-negative",
    "n_cells": lambda v: None if v >= 2 and v % 2 == 0 else "must be an even integer >= 2",
    "n_half": lambda v: None if v >= 2 else "must be at least 2",
}


def parse_config(text: str) -> RunConfig:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value': {raw!r}")
        key, val = (p.strip() for p in line.split("=", 1))
        if key not in _PARSERS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        try:
            parsed = _PARSERS[key](val)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {val!r}") from exc
        if key == "dirichlet" and len(parsed) != 2:
            raise ConfigError(f"line {lineno}: dirichlet needs two values: {raw!r}")
        problem = _CHECKS.get(key, lambda _: None)(parsed)
        if problem:
            raise ConfigError(f"line {lineno}: {key} {problem}: {raw.strip()!r}")
        values[key] = parsed
    missing = [k for k in _REQUIRED if k not in values]
    if missing:
        raise ConfigError(f"missing required key(s): {', '.join(missing)}")
    if values["scheme"] != "diffusion" and "eps" not in values:
        raise ConfigError("missing required key: eps")
    return RunConfig(**values)


def format_config(cfg: RunConfig) -> str:
    out = []
    for k, v in asdict(cfg).items():
        if v is None:
            continue
        if isinstance(v, tuple):
            v = ", ".join(repr(float(x)) for x in v)
        out.append(f"{k} = {v}")
    return "\n".join(out) + "\n"


def build_case(cfg: RunConfig) -> bap.BapConfig:
    grid = build_grid(cfg.n_half)
    eq = Equilibrium.uniform(grid)
    if cfg.case == "paper":
        boundary, f_init = bap.benchmark_boundary(), bap.zero_initial
    elif cfg.case == "constant":
        c = cfg.constant_value
        boundary = bap.constant_boundary(c, eq)

        def f_init(x, v):
            return c * np.tile(eq.values, (np.size(x), 1))

    else:
        boundary = bap.BoundaryData(lambda t, v: np.zeros_like(v), lambda t, v: np.zeros_like(v))
        f_init = bap.zero_initial
    return bap.BapConfig(
        eps=cfg.eps,
        mesh=SpatialMesh(cfg.n_cells),
        grid=grid,
        eq=eq,
        boundary=boundary,
        t_end=cfg.t_end,
        cfl_sigma=cfg.cfl_sigma,
        f_init=f_init,
    )


@dataclass
class Profile:
    x: np.ndarray
    rho: np.ndarray
    rho_bar: np.ndarray | None
    meta: dict = field(default_factory=dict)


def _matched_density(f: np.ndarray, x: np.ndarray, kcfg: bap.BapConfig) -> np.ndarray:
    """<f>_{V-} / <E>_{V-} pointwise, V- chosen by the position of each row."""
    grid, eq = kcfg.grid, kcfg.eq
    out = np.empty(len(x))
    for i, xi in enumerate(x):
        side = half_sign(float(xi))
        out[i] = (f[i] * grid.weights)[grid.mask(side)].sum() / eq.half_mass(side)
    return out


def simulate(cfg: RunConfig) -> Profile:
    """Run one configuration and return the density profile at ``t_end``."""
    kcfg = build_case(cfg)
    nodes = kcfg.mesh.interfaces[1:-1]
    meta: dict = {"t_end": cfg.t_end}
    if cfg.scheme == "bap":
        if cfg.dt is not None:
            raise ConfigError("dt override is only supported for explicit and diffusion")
        res = bap.run(kcfg)
        state = res.final
        prof = Profile(nodes, state.rho.copy(), bap.rho_bar(state, kcfg))
        meta.update(dt=res.dt, steps=res.steps, max_constraint_residual=res.max_constraint_residual)
    elif cfg.scheme == "classical":
        if cfg.dt is not None:
            raise ConfigError("dt override is only supported for explicit and diffusion")
        res = classical.run_classical(kcfg)
        st = res.final
        f = np.outer(st.rho, kcfg.eq.values) + 0.5 * (st.g[:-1] + st.g[1:])
        prof = Profile(nodes, st.rho.copy(), _matched_density(f, nodes, kcfg))
        meta.update(
            dt=res.dt,
            steps=res.steps,
            max_constraint_residual=res.max_constraint_residual,
            wall_closure=classical.WALL_CLOSURE,
        )
    elif cfg.scheme == "explicit":
        snaps, dt, steps = reference.run_explicit(kcfg, dt=cfg.dt)
        f = snaps[-1].f
        x = kcfg.mesh.centers
        prof = Profile(x, f @ kcfg.grid.weights, _matched_density(f, x, kcfg))
        meta.update(dt=dt, steps=steps, max_constraint_residual=0.0)
    else:
        kappa = abs(diffusion_coefficient(kcfg.eq))
        dt = cfg.dt if cfg.dt is not None else DIFFUSION_DT
        if cfg.case == "constant":
            init = np.full(nodes.size, cfg.constant_value)
        else:
            init = np.zeros(nodes.size)
        sol = reference.diffusion_solve(init, cfg.dirichlet, kappa, cfg.t_end, dt)
        steps = int(np.ceil(cfg.t_end / dt - 1e-12)) if cfg.t_end > 0 else 0
        prof = Profile(nodes, sol.rho0, None)
        meta.update(dt=dt, steps=steps, kappa=kappa)
    prof.meta = meta
    return prof


def write_profile(prof: Profile, path: str | os.PathLike, cfg: RunConfig | None = None) -> Path:
    path = Path(path)
    if path.parent != Path(""):
        path.parent.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    cols = ["x", "rho"] + ([] if prof.rho_bar is None else ["rho_bar"])
    buf.write(",".join(cols) + "\n")
    data = [prof.x, prof.rho] + ([] if prof.rho_bar is None else [prof.rho_bar])
    for row in zip(*data):
        buf.write(",".join(f"{float(v):.17g}" for v in row) + "\n")
    path.write_text(buf.getvalue(), encoding="utf-8", newline="\n")
    side = {} if cfg is None else {k: v for k, v in asdict(cfg).items() if v is not None}
    side.update(prof.meta)
    lines = []
    for k, v in side.items():
        if isinstance(v, tuple):
            v = ", ".join(repr(float(x)) for x in v)
        elif isinstance(v, float):
            v = repr(v)
        lines.append(f"{k} = {v}")
    meta_path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    return path


def meta_path(path: str | os.PathLike) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".meta")


def read_profile(path: str | os.PathLike) -> Profile:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[:2] != ["x", "rho"]:
            raise ValueError(f"{path}: expected a header starting with x,rho")
        rows = np.array([[float(v) for v in r] for r in reader if r], dtype=float)
    if rows.size == 0:
        raise ValueError(f"{path}: no data rows")
    rho_bar = rows[:, 2] if rows.shape[1] > 2 else None
    meta = {}
    mp = meta_path(path)
    if mp.exists():
        for line in mp.read_text(encoding="utf-8").splitlines():
            if "=" in line:
                k, v = (p.strip() for p in line.split("=", 1))
                meta[k] = v
    return Profile(rows[:, 0], rows[:, 1], rho_bar, meta)


def run_command(cfg: RunConfig, output_path: str | None = None) -> tuple[Path, Profile]:
    if output_path is not None:
        cfg = replace(cfg, output_path=str(output_path))
    prof = simulate(cfg)
    out = write_profile(prof, cfg.output_path, cfg)
    return out, prof


@dataclass(frozen=True)
class ComparisonReport:
    l1_error: float
    linf_error: float
    grid: str
    metadata: dict = field(default_factory=dict)

    def __str__(self):
        return f"L1 = {self.l1_error:.6e}  Linf = {self.linf_error:.6e}  ({self.grid})"


def compare_profiles(
    a: Profile, b: Profile, window: tuple[float, float] | None = None, column: str = "rho"
) -> ComparisonReport:
    """Interpolate the coarser profile onto the finer one and take norms.

    Only points of the finer grid that lie inside both x-ranges and the window
    count.  L1 is the trapezoid integral of |difference| over those points.
    """
    fine, coarse = (a, b) if a.x.size >= b.x.size else (b, a)
    yf, yc = getattr(fine, column), getattr(coarse, column)
    if yf is None or yc is None:
        raise ValueError(f"column {column!r} missing from one of the profiles")
    lo = max(fine.x.min(), coarse.x.min())
    hi = min(fine.x.max(), coarse.x.max())
    if window is not None:
        lo, hi = max(lo, window[0]), min(hi, window[1])
    keep = (fine.x >= lo - 1e-12) & (fine.x <= hi + 1e-12)
    if lo > hi or not keep.any():
        raise ValueError("profiles have no overlapping points in the requested window")
    x = fine.x[keep]
    diff = np.abs(yf[keep] - np.interp(x, coarse.x, yc))
    l1 = float(np.trapezoid(diff, x)) if x.size > 1 else 0.0
    desc = f"{x.size} points of the finer grid on [{x[0]:.6g}, {x[-1]:.6g}]"
    meta = {"a": dict(a.meta), "b": dict(b.meta)}
    return ComparisonReport(l1, float(diff.max()), desc, meta)


def compare(file_a, file_b, window: tuple[float, float] | None = None, column: str = "rho"):
    return compare_profiles(read_profile(file_a), read_profile(file_b), window, column)


@dataclass
class SweepRow:
    eps: float
    path: str
    steps: int | None
    wall_time: float
    l1_error: float | None = None
    linf_error: float | None = None
    error: str | None = None


def _sweep_member(args):
    base, eps, path = args
    t0 = time.perf_counter()
    try:
        _, prof = run_command(replace(base, eps=eps), path)
    except Exception as exc:  # recorded, the sweep carries on
        return SweepRow(eps, path, None, time.perf_counter() - t0, error=f"{type(exc).__name__}: {exc}")
    return SweepRow(eps, path, int(prof.meta["steps"]), time.perf_counter() - t0)


def sweep(
    base: RunConfig,
    eps_values,
    out_dir: str | os.PathLike,
    reference_path: str | None = None,
    window: tuple[float, float] | None = None,
    jobs: int = 1,
) -> list[SweepRow]:
    """Run ``base`` for every eps; members run in separate processes when jobs > 1."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    tasks = [
        (base, float(e), str(out_dir / f"{base.scheme}_eps{float(e):.6g}.csv"))
        for e in eps_values
    ]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_member, tasks))
    else:
        rows = [_sweep_member(t) for t in tasks]
    if reference_path is not None:
        ref = read_profile(reference_path)
        for row in rows:
            if row.error is None:
                rep = compare_profiles(read_profile(row.path), ref, window)
                row.l1_error, row.linf_error = rep.l1_error, rep.linf_error
    write_summary(rows, out_dir / "summary.csv")
    return rows


def write_summary(rows: list[SweepRow], path: Path) -> None:
    fields = ["eps", "steps", "wall_time", "l1_error", "linf_error", "path", "error"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(fields)
        for r in rows:
            w.writerow(["" if getattr(r, k) is None else getattr(r, k) for k in fields])


def format_summary(rows: list[SweepRow]) -> str:
    head = f"{'eps':>10} {'steps':>7} {'time[s]':>8} {'L1':>11} {'Linf':>11}  status"
    lines = [head]
    for r in rows:
        def num(v):
            return f"{v:11.4e}" if v is not None else f"{'-':>11}"

        steps = f"{r.steps:7d}" if r.steps is not None else f"{'-':>7}"
        status = "ok" if r.error is None else r.error
        lines.append(f"{r.eps:10.3g} {steps} {r.wall_time:8.2f} {num(r.l1_error)} {num(r.linf_error)}  {status}")
    return "\n".join(lines)


def chandrasekhar_command(
    n_nodes: int = 64, tol: float = 1e-10, incoming: str = "linear", table_path: str | None = None
) -> float:
    """Milne wall value for inflow mu (``linear``) or 1 (``constant``)."""
    table = solve_h(n_nodes=n_nodes, tol=tol)
    if incoming == "linear":
        fn = lambda mu: mu  # noqa: E731
    elif incoming == "constant":
        fn = np.ones_like
    else:
        raise ValueError(f"incoming must be 'linear' or 'constant', got {incoming!r}")
    value = milne_boundary_value(table, fn)
    if table_path is not None:
        rows = ["mu,weight,H"] + [
            f"{m:.17g},{w:.17g},{h:.17g}"
            for m, w, h in zip(table.mu_nodes, table.mu_weights, table.h_values)
        ]
        Path(table_path).write_text("\n".join(rows) + "\n", encoding="utf-8", newline="\n")
    return value


FIG1_LEFT = (1.0, 0.5, 0.2)
FIG1_RIGHT = (0.05, 1e-4)


def fig1(out_dir: str | os.PathLike, n_cells: int = 100, ref_cells: int = 1000, svg: bool = True):
    """Regenerate both panels: BAP runs, their references, and the comparisons.

    Kinetic regimes are checked against the resolved explicit scheme on
    ``ref_cells`` cells; eps = 1e-4 against the heat equation whose left wall
    value is the Milne value.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    wall = chandrasekhar_command(table_path=str(out_dir / "h_table.csv"))
    lines = [f"milne wall value = {wall:.8f}"]
    curves: dict[str, list] = {"left": [], "right": []}
    for panel, eps_list in (("left", FIG1_LEFT), ("right", FIG1_RIGHT)):
        for eps in eps_list:
            tag = f"eps{eps:.6g}"
            bcfg = RunConfig(scheme="bap", eps=eps, t_end=0.4, n_cells=n_cells)
            bpath, bprof = run_command(bcfg, str(out_dir / f"bap_{tag}.csv"))
            if eps >= 0.01:
                rcfg = RunConfig(scheme="explicit", eps=eps, t_end=0.4, n_cells=ref_cells)
                window = None
            else:
                rcfg = RunConfig(
                    scheme="diffusion", t_end=0.4, n_cells=ref_cells, dirichlet=(wall, 0.0)
                )
                window = DEFAULT_WINDOW
            rpath, rprof = run_command(rcfg, str(out_dir / f"ref_{tag}.csv"))
            rep = compare_profiles(bprof, rprof, window)
            lines.append(f"eps = {eps:<8g} {rep}  first node rho = {bprof.rho[0]:.6f}")
            curves[panel].append((f"eps={eps:g}", bprof, rprof))
    if svg:
        for panel, items in curves.items():
            write_svg(items, out_dir / f"fig1_{panel}.svg")
    report = "\n".join(lines) + "\n"
    (out_dir / "fig1_report.txt").write_text(report, encoding="utf-8", newline="\n")
    return report


def write_svg(items, path: Path, width: int = 480, height: int = 320) -> None:
    """Polyline plot of each (label, scheme, reference) pair; rho in [0, 1]."""
    colours = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"]

    def pts(prof):
        xs = 40 + prof.x * (width - 60)
        ys = height - 30 - np.clip(prof.rho, 0, 1) * (height - 50)
        return " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(xs, ys))

    body = []
    for k, (label, prof, ref) in enumerate(items):
        c = colours[k % len(colours)]
        body.append(f'<polyline fill="none" stroke="{c}" stroke-dasharray="4 3" points="{pts(ref)}"/>')
        body.append(f'<polyline fill="none" stroke="{c}" points="{pts(prof)}"/>')
        body.append(f'<text x="{width - 110}" y="{20 + 14 * k}" fill="{c}" font-size="11">{label}</text>')
    axes = (
        f'<line x1="40" y1="{height - 30}" x2="{width - 20}" y2="{height - 30}" stroke="black"/>'
        f'<line x1="40" y1="20" x2="40" y2="{height - 30}" stroke="black"/>'
    )
    svg = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">'
        + axes
        + "".join(body)
        + "</svg>\n"
    )
    path.write_text(svg, encoding="utf-8", newline="\n")
