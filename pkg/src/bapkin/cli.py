"""Command line front end: ``bapkin run|compare|sweep|chandrasekhar|fig1``."""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from . import harness


def _config(path: str, overrides: list[str]) -> harness.RunConfig:
    """Read a config file; ``--set key=value`` entries replace file entries."""
    keys = {o.split("=", 1)[0].strip() for o in overrides}
    kept = [
        line
        for line in Path(path).read_text(encoding="utf-8").splitlines()
        if line.split("#", 1)[0].split("=", 1)[0].strip() not in keys
    ]
    return harness.parse_config("\n".join(kept + overrides))


def _window(values):
    return None if values is None else (float(values[0]), float(values[1]))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bapkin", description=__doc__)
    sub = p.add_subparsers(dest="verb", required=True)

    r = sub.add_parser("run", help="run one configuration")
    r.add_argument("config")
    r.add_argument("-o", "--output", help="density CSV path (default: output_path from the config)")
    r.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a config entry")

    c = sub.add_parser("compare", help="L1/Linf distance between two density CSVs")
    c.add_argument("file_a")
    c.add_argument("file_b")
    c.add_argument("--window", nargs=2, type=float, metavar=("XMIN", "XMAX"))
    c.add_argument("--column", default="rho", choices=("rho", "rho_bar"))

    s = sub.add_parser("sweep", help="run a configuration for several eps")
    s.add_argument("config")
    s.add_argument("--eps", nargs="+", type=float, required=True)
    s.add_argument("--out-dir", default="sweep")
    s.add_argument("--reference", help="CSV every run is compared against")
    s.add_argument("--window", nargs=2, type=float, metavar=("XMIN", "XMAX"))
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")

    h = sub.add_parser("chandrasekhar", help="Milne wall value from the H-function")
    h.add_argument("--n-nodes", type=int, default=64)
    h.add_argument("--tol", type=float, default=1e-10)
    h.add_argument("--incoming", choices=("linear", "constant"), default="linear")
    h.add_argument("--table", help="write the H table to this CSV")

    f = sub.add_parser("fig1", help="regenerate both panels of the benchmark figure")
    f.add_argument("--out-dir", default="fig1")
    f.add_argument("--n-cells", type=int, default=100)
    f.add_argument("--ref-cells", type=int, default=1000)
    f.add_argument("--no-svg", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.verb == "run":
            cfg = _config(args.config, args.set)
            t0 = time.perf_counter()
            path, prof = harness.run_command(cfg, args.output)
            print(
                f"wrote {path} ({prof.x.size} rows, dt = {prof.meta['dt']:.6g}, "
                f"steps = {prof.meta['steps']}, {time.perf_counter() - t0:.2f} s)"
            )
        elif args.verb == "compare":
            print(harness.compare(args.file_a, args.file_b, _window(args.window), args.column))
        elif args.verb == "sweep":
            cfg = _config(args.config, args.set)
            rows = harness.sweep(
                cfg, args.eps, args.out_dir, args.reference, _window(args.window), args.jobs
            )
            print(harness.format_summary(rows))
            return 0 if all(r.error is None for r in rows) else 1
        elif args.verb == "chandrasekhar":
            value = harness.chandrasekhar_command(args.n_nodes, args.tol, args.incoming, args.table)
            print(f"{value:.8f}")
        elif args.verb == "fig1":
            print(harness.fig1(args.out_dir, args.n_cells, args.ref_cells, not args.no_svg), end="")
    except (harness.ConfigError, ValueError, OSError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
