"""Command-line front end.

    fostab analyze  SPEC [--at p,q]       verdict; exit 0 Stable, 1 Unstable, 2 Marginal
    fostab map      SPEC [--res N] [--out DIR] [--svg]
    fostab scan     SPEC [--res N] [--out DIR]      (one free parameter)
    fostab boundary SPEC [--res N] [--out DIR] [--svg]
    fostab oracle   SPEC [--at p,q] [--out DIR]     (exact rational orders)
    fostab simulate SPEC [--at p,q] [--h H] [--horizon T] [--out DIR]

Any error (malformed spec, order outside (0, 2), ...) exits with status 3.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import gl_validator, rational_oracle, render
from .quasipoly import ModelError
from .regions import MAX_RESOLUTION, MIN_RESOLUTION, ConsistencyError, build_region_map, classify_grid, region_report
from .rhp_counter import TAU_MARGIN, Kind, verdict
from .specfile import Problem, SpecError, load, parse_point

EXIT_CODES = {Kind.STABLE: 0, Kind.UNSTABLE: 1, Kind.MARGINAL: 2}
EXIT_ERROR = 3


class CliError(Exception):
    pass


def _positive(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"{text} is not positive")
    return v


def _resolution(text: str) -> int:
    v = int(text)
    if not MIN_RESOLUTION <= v <= MAX_RESOLUTION:
        raise argparse.ArgumentTypeError(f"resolution must lie in [{MIN_RESOLUTION}, {MAX_RESOLUTION}]")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fostab", description="Stability of incommensurate fractional-order LTI systems.")
    parser.add_argument("--seed", type=int, default=0, help="seed for randomized choices (random initial state)")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help, at=False, res=False, out=False, svg=False):
        p = sub.add_parser(name, help=help)
        p.add_argument("spec", type=Path, help="JSON system spec")
        p.add_argument("--tol-margin", type=_positive, default=TAU_MARGIN,
                       help=f"imaginary-axis margin below which a verdict is Marginal (default {TAU_MARGIN:g})")
        if at:
            p.add_argument("--at", default=None, help="slice point, e.g. 1,1 or 67/100,81/100")
        if res:
            p.add_argument("--res", type=_resolution, default=100, help="grid cells per axis (default 100)")
        if out:
            p.add_argument("--out", type=Path, default=None, help="directory for output files")
        if svg:
            p.add_argument("--svg", action="store_true", help="also render an SVG figure")
        return p

    add("analyze", "verdict at one point", at=True)
    add("map", "region map over a two-parameter slice", res=True, out=True, svg=True)
    add("scan", "verdicts along a one-parameter slice", res=True, out=True)
    add("boundary", "stability boundary polylines", res=True, out=True, svg=True)
    add("oracle", "exact rational-order reduction and its roots", at=True, out=True)
    sim = add("simulate", "Grünwald-Letnikov trajectory", at=True, out=True)
    sim.add_argument("--h", type=_positive, default=1e-3, help="step size (default 1e-3)")
    sim.add_argument("--horizon", type=_positive, default=50.0, help="final time (default 50)")
    sim.add_argument("--x0", default=None, help="initial state, comma separated, or 'random'")
    return parser


def _write(out: Path | None, name: str, text: str) -> None:
    if out is None:
        return
    out.mkdir(parents=True, exist_ok=True)
    (out / name).write_text(text)


def _progress(done: int, total: int) -> None:
    if done == total or done % max(1, total // 10) == 0:
        print(f"  classified {done}/{total} columns", file=sys.stderr)


def cmd_analyze(problem: Problem, args) -> int:
    qp = problem.qp_at(parse_point(args.at))
    v = verdict(qp, args.tol_margin)
    print(v)
    print(f"rhp count: {'n/a' if v.rhp_count is None else v.rhp_count}")
    print(f"margin: {v.margin:.6g}")
    return EXIT_CODES[v.kind]


def _need_slice(problem: Problem, dim: int, command: str):
    if problem.slice is None:
        raise CliError(f"'{command}' needs a spec with a 'slice' section")
    if problem.slice.dim != dim:
        if dim == 2:
            raise CliError("the slice has one free parameter; use 'scan' for a verdict-vs-parameter sweep")
        raise CliError("the slice has two free parameters; use 'map'")
    return problem.slice


def cmd_map(problem: Problem, args) -> int:
    slc = _need_slice(problem, 2, "map")
    rmap = build_region_map(problem.sym, slc, args.res, args.tol_margin, progress=_progress)
    report = region_report(rmap)
    print(report.text())
    _write(args.out, "grid.csv", render.grid_csv(rmap))
    _write(args.out, "regions.txt", report.text() + "\n")
    _write(args.out, "boundary.csv", render.boundary_csv(rmap.polylines))
    if args.svg:
        _write(args.out or Path("."), "map.svg", render.region_svg(rmap, slc.params, title=problem.name))
    return 0


def cmd_scan(problem: Problem, args) -> int:
    slc = _need_slice(problem, 1, "scan")
    grid = classify_grid(problem.sym, slc, args.res, args.tol_margin)
    text = render.scan_csv(grid)
    if args.out is None:
        sys.stdout.write(text)
    _write(args.out, "scan.csv", text)
    return 0


def cmd_boundary(problem: Problem, args) -> int:
    from .boundary import trace_boundary

    slc = _need_slice(problem, 2, "boundary")
    rmap = build_region_map(problem.sym, slc, args.res, args.tol_margin, trace=False, progress=_progress)
    rmap.polylines = trace_boundary(rmap.grid)
    text = render.boundary_csv(rmap.polylines)
    print(f"{len(rmap.polylines)} polyline(s), {sum(len(p) for p in rmap.polylines)} point(s)")
    if args.out is None:
        sys.stdout.write(text)
    _write(args.out, "boundary.csv", text)
    if args.svg:
        _write(args.out or Path("."), "boundary.svg", render.region_svg(rmap, slc.params, title=problem.name))
    return 0


def cmd_oracle(problem: Problem, args) -> int:
    point = problem.point(parse_point(args.at))
    try:
        if problem.system is not None:
            m, poly = rational_oracle.reduce(problem.system, point)
        else:
            m, poly = rational_oracle.reduce_terms(problem.sym, point)
    except ModelError as exc:
        raise CliError(f"{exc}; write orders as exact fractions such as \"67/100\", "
                       "or use 'analyze' for irrational orders") from None
    print(f"m: {m}")
    print(f"degree: {poly.degree}")
    roots = rational_oracle.polynomial_roots(poly)
    v = rational_oracle.classify_roots(roots, m)
    print(f"roots: {len(roots)}")
    print(f"max backward error: {rational_oracle.backward_errors(poly, roots).max(initial=0.0):.3g}")
    print(v)
    _write(args.out, "roots.csv", render.roots_csv(roots))
    return EXIT_CODES[v.kind]


def cmd_simulate(problem: Problem, args) -> int:
    if problem.system is None:
        raise CliError("'simulate' needs a matrix-form spec")
    point = problem.point(parse_point(args.at))
    orders = [float(o) for o in problem.system.order_values(point)]
    A = problem.system.matrix()
    if args.x0 == "random":
        x0 = np.random.default_rng(args.seed).uniform(-1, 1, len(A))
    elif args.x0:
        x0 = [float(v) for v in args.x0.split(",")]
    else:
        x0 = None
    traj = gl_validator.simulate(A, orders, x0, h=args.h, horizon=args.horizon, forcing=problem.forcing)
    eq = gl_validator.equilibrium(A, problem.forcing)
    print(gl_validator.empirical_verdict(traj, eq))
    _write(args.out, "trajectory.csv", traj.csv())
    return 0


COMMANDS = {"analyze": cmd_analyze, "map": cmd_map, "scan": cmd_scan, "boundary": cmd_boundary,
            "oracle": cmd_oracle, "simulate": cmd_simulate}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        problem = load(args.spec)
        return COMMANDS[args.command](problem, args)
    except (SpecError, ModelError, CliError, ConsistencyError, rational_oracle.RootFindingError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
