"""Command-line entry point ``mcf-lab``.

Exit codes: 0 success, 1 expectation failure, 2 input error, 3 numerical
failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import scenarios
from .eigen import eigen_limit, residual_branches
from .experiments import (COMPARE_ROUTES, compare, run_many, write_csv,
                          write_json, write_pairs, _clean)
from .geometry import coercivity_margin, crossing_point
from .hj import evolve_hj, profile_from_evolution
from .model import (Grid, GridFunction, GridMismatchError, NumericalError,
                    Polynomial, ScenarioError, SolverConfig, sup_norm)
from .oracle import (DPConfig, asymptotic_profile, distance, dp_values,
                     eigenvalue_formula)
from .parabolic import eigen_from_evolution, evolve

EXIT_OK, EXIT_EXPECTATION, EXIT_INPUT, EXIT_NUMERICAL = 0, 1, 2, 3

log = logging.getLogger("mcf_lab")


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers: {text}") from exc


def _global_flags(sub: bool) -> argparse.ArgumentParser:
    # subcommands accept the same flags; SUPPRESS keeps a value given before
    # the subcommand from being reset
    d = argparse.SUPPRESS if sub else None
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--out", type=Path, default=d, help="output directory")
    p.add_argument("--grid-m", type=int, default=d, help="number of grid cells")
    p.add_argument("--seed", type=int, default=d,
                   help="seed for randomized scenarios")
    p.add_argument("--jobs", type=int, default=d if sub else 1,
                   help="concurrent scenario runs")
    p.add_argument("-v", "--verbose", action="store_true",
                   default=d if sub else False)
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mcf-lab", parents=[_global_flags(False)],
        description="Radial forced curvature flow laboratory")
    common = _global_flags(True)
    sp = parser.add_subparsers(dest="command", required=True)

    p = sp.add_parser("evolve", parents=[common],
                      help="time evolution (eta > 0 regularized, eta = 0 level set)")
    p.add_argument("--scenario", required=True)
    p.add_argument("--eta", type=float, default=0.1)
    p.add_argument("--T", type=float, default=1.0)
    p.add_argument("--cfl", type=float, default=0.9)
    p.add_argument("--reports", type=int, default=20)

    p = sp.add_parser("eigen", parents=[common], help="k-regularized eigenvalue")
    p.add_argument("--scenario", required=True)
    p.add_argument("--ks", type=_floats, default=[0.1, 0.05, 0.025])
    p.add_argument("--etas", type=_floats, default=[0.025, 0.0125])

    p = sp.add_parser("oracle", parents=[common], help="control-theoretic oracle")
    p.add_argument("--scenario", required=True)
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--horizon", type=float, default=None)
    p.add_argument("--reversed-order", action="store_true",
                   help="swap the distance argument order in the profile")

    p = sp.add_parser("coercivity", parents=[common], help="coercivity report")
    p.add_argument("--scenario", required=True)

    p = sp.add_parser("residual", parents=[common],
                      help="stationary residual of a candidate pair")
    p.add_argument("--scenario", required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--w-file", type=Path)
    g.add_argument("--w-poly", type=_floats)
    p.add_argument("--eta", type=float, default=0.0)
    p.add_argument("--q", type=float, default=None)

    p = sp.add_parser("run", parents=[common], help="run scenarios with expectations")
    p.add_argument("names", nargs="+", help="built-in names, files, or 'all'")

    p = sp.add_parser("compare", parents=[common], help="cross-route comparison")
    p.add_argument("--scenario", required=True)
    p.add_argument("--routes", default="formula,hj,dp",
                   help=f"comma-separated subset of {','.join(COMPARE_ROUTES)}")
    p.add_argument("--tol", type=float, default=2e-2)
    return parser


def _out(args) -> Path | None:
    out = getattr(args, "out", None)
    if out:
        out.mkdir(parents=True, exist_ok=True)
    return out


def _emit(doc: dict, out: Path | None, name: str) -> None:
    doc = _clean(doc)
    if out:
        write_json(out / name, doc)
    print(json.dumps(doc, indent=1, sort_keys=True, default=float))


def cmd_evolve(args) -> int:
    sc = scenarios.load(args.scenario)
    m = args.grid_m or 400
    grid = Grid(sc.problem.R, m)
    cfg = SolverConfig(eta=args.eta, T=args.T, cfl_safety=args.cfl,
                       n_reports=args.reports)
    solver = evolve if args.eta > 0 else evolve_hj
    series = solver(sc.problem, cfg, grid)
    out = _out(args)
    lam, _ = eigen_from_evolution(series, (args.T / 2, args.T))
    summary = {"lambda_mean": lam,
               "final_grad_sup": float(series.grad_sup[-1]),
               "max_dt_sup": float(series.dt_sup.max()),
               "dt": series.dt, "nsteps": series.meta["nsteps"]}
    if out:
        for j, (t, u) in enumerate(zip(series.times, series.snapshots)):
            write_csv(out / f"snapshot_{j:04d}.csv", u)
        for name, rows in series.monitors().items():
            write_pairs(out / f"{name}.csv", "t,value", rows)
        write_pairs(out / "snapshot_times.csv", "index,t",
                    enumerate(series.times))
    if args.eta == 0:
        try:
            w = profile_from_evolution(series, lam, args.T)
        except ScenarioError:
            w = None
        if w is not None and out:
            write_csv(out / "profile.csv", w)
            summary["profile_file"] = str(out / "profile.csv")
    _emit(summary, out, "summary.json")
    return EXIT_OK


def cmd_eigen(args) -> int:
    sc = scenarios.load(args.scenario)
    grid = Grid(sc.problem.R, args.grid_m or 120)
    est = eigen_limit(sc.problem, args.ks, args.etas, grid=grid)
    out = _out(args)
    if out:
        write_csv(out / "w.csv", est.w)
    _emit(est.to_dict(), out, "eigen.json")
    return EXIT_OK


def cmd_oracle(args) -> int:
    sc = scenarios.load(args.scenario)
    base = sc.dp
    dpc = DPConfig(m=args.grid_m or base.m, dt=args.dt if args.dt else base.dt,
                   horizon=args.horizon or base.horizon,
                   controls_per_node=base.controls_per_node)
    grid = Grid(sc.problem.R, dpc.m)
    rep = eigenvalue_formula(sc.problem, grid)
    out = _out(args)
    times = [dpc.horizon / 2, dpc.horizon]
    V = dp_values(sc.problem, dpc, times)
    d = distance(sc.problem, rep.lam, dpc)
    w = asymptotic_profile(sc.problem, dpc, rep, args.reversed_order)
    doc = {"aubry": rep.to_dict(), "distance_converged": d.converged,
           "lambda_dp": float(np.mean((V[1].values - V[0].values)
                                      / (times[1] - times[0])))}
    if out:
        for t, v in zip(times, V):
            write_csv(out / f"value_t{t:g}.csv", v)
        write_csv(out / "profile.csv", w)
        with open(out / "distance.csv", "w") as fh:
            fh.write("r," + ",".join(f"{r:.17g}" for r in grid.nodes) + "\n")
            for r, row in zip(grid.nodes, d.matrix):
                fh.write(f"{r:.17g}," + ",".join(f"{x:.17g}" for x in row) + "\n")
    _emit(doc, out, "aubry.json")
    return EXIT_OK


def cmd_coercivity(args) -> int:
    sc = scenarios.load(args.scenario)
    grid = Grid(sc.problem.R, args.grid_m or 400)
    rep = coercivity_margin(sc.problem, grid)
    r_cr = crossing_point(sc.problem, report=rep)
    out = _out(args)
    if out:
        write_csv(out / "margin.csv", rep.margin)
    _emit(rep.to_dict(r_cr), out, "coercivity.json")
    return EXIT_OK


def cmd_residual(args) -> int:
    sc = scenarios.load(args.scenario)
    if args.w_file is not None:
        try:
            w = GridFunction.from_csv(args.w_file.read_text())
        except OSError as exc:
            raise ScenarioError(str(exc), "w-file") from exc
    else:
        w = Polynomial(tuple(args.w_poly))
    grid = Grid(sc.problem.R, args.grid_m or 400)
    res = residual_branches(sc.problem, args.lam, w, args.eta, args.q, grid)
    out = _out(args)
    doc = {}
    for name, gf in res.items():
        doc[name] = {"sup_interior": float(np.max(np.abs(gf.values[:-1]))),
                     "boundary": float(gf.values[-1]),
                     "sup": sup_norm(gf), "h": gf.grid.h}
        if out:
            write_csv(out / f"residual_{name}.csv", gf)
    _emit(doc, out, "residual.json")
    return EXIT_OK


def cmd_run(args) -> int:
    names = list(scenarios.BUILTIN) if args.names == ["all"] else args.names
    scs = [scenarios.load(n) for n in names]
    results = run_many(scs, _out(args), jobs=args.jobs or 1,
                       grid_m=args.grid_m, seed=args.seed)
    status = EXIT_OK
    for code, summary in results:
        for c in summary["expectations"]:
            mark = "ok  " if c["ok"] else "FAIL"
            print(f"{mark} {summary['scenario']}: {c['quantity']} = {c['value']!r}"
                  f" (target {c['target']!r}, {c['op']} tol {c['tol']})")
        if code:
            status = EXIT_EXPECTATION
    return status


def cmd_compare(args) -> int:
    sc = scenarios.load(args.scenario)
    routes = [r.strip() for r in args.routes.split(",") if r.strip()]
    doc = compare(sc, routes, _out(args), tol=args.tol, grid_m=args.grid_m)
    print(json.dumps(doc, indent=1, sort_keys=True, default=float))
    flags = [p["flag"] for p in doc["pairs"]] + [doc.get("profile_flag")]
    return EXIT_EXPECTATION if "disagree" in flags else EXIT_OK


COMMANDS = {"evolve": cmd_evolve, "eigen": cmd_eigen, "oracle": cmd_oracle,
            "coercivity": cmd_coercivity, "residual": cmd_residual,
            "run": cmd_run, "compare": cmd_compare}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ScenarioError, GridMismatchError, ValueError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
