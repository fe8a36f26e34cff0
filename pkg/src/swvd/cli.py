"""Command line entry point: ``swvd run|convergence|benchmark <config> ...``."""
from __future__ import annotations

import argparse
import dataclasses
import sys

from .config import FORMATS, load_config
from .errors import SwvdError


def _levels(text):
    try:
        vals = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated integers, got {text!r}") from None
    if not vals or min(vals) < 1:
        raise argparse.ArgumentTypeError("levels must be positive integers")
    return vals


def _nonneg(text):
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return v


def build_parser():
    p = argparse.ArgumentParser(prog="swvd", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a scenario and write snapshots")
    r.add_argument("config")
    r.add_argument("--out", default=None, help="snapshot directory (default: out_dir key)")
    r.add_argument("--format", choices=FORMATS, default=None)
    r.add_argument("--snapshots", type=_nonneg, default=None,
                   help="number of evenly spaced snapshots (0: initial and final)")

    c = sub.add_parser("convergence", help="L1 errors and rates against a finer uniform run")
    c.add_argument("config")
    c.add_argument("--levels", type=_levels, required=True, help="e.g. 50,100,200")
    c.add_argument("--reference", type=int, default=None,
                   help="reference resolution (default: twice the finest level)")

    b = sub.add_parser("benchmark", help="CPU-time ratio of uniform and adaptive runs")
    b.add_argument("config")
    b.add_argument("--levels", type=int, required=True, help="refinement levels M")
    return p


def _run(args):
    from .driver import run
    cfg = load_config(args.config)
    if args.format:
        cfg = dataclasses.replace(cfg, format=args.format)
    out = args.out or cfg.out_dir
    sim, rep = run(cfg, out_dir=out, fmt=cfg.format, snapshots=args.snapshots)
    d = sim.iface.diagnostics
    print(f"t = {rep.t_final:.6g} after {rep.steps} steps ({rep.substeps} substeps)")
    print(f"cells: final {sim.mesh.n_cells}, max {rep.max_cells}, mean {rep.mean_cells:.0f}")
    print(f"min depth {rep.min_depth:.6g}, min h*rho {rep.min_hrho:.6g}, halvings {rep.halvings}")
    print(f"time: total {rep.time_total:.3f} s, grid {rep.time_grid:.3f} s")
    print(f"interface: mixed-cell resets {d.reset_cells} (volume change {d.reset_defect:.3e}), "
          f"density defect without mixed neighbour {d.mass_defect:.3e}")
    for p in rep.snapshots:
        print(f"wrote {p}")


def _convergence(args):
    from .bench import convergence
    cfg = load_config(args.config)
    res = convergence(cfg, args.levels, args.reference)
    print(res.table())


def _benchmark(args):
    from .bench import benchmark
    cfg = load_config(args.config)
    print(benchmark(cfg, args.levels).table())


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"run": _run, "convergence": _convergence, "benchmark": _benchmark}[args.command]
    try:
        handler(args)
    except (SwvdError, OSError) as exc:
        print(f"swvd: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
