"""Command-line front end.

Subcommands: run1d, run2d, geom {hausdorff | jones | cn}, verify, sweep.
Outputs are UTF-8 CSV ('.' decimal separator, '\\n' line endings) and JSON;
identical scenario plus seed produce byte-identical files.  The sweep
subcommand fans independent scenarios out over worker threads, capped by
the PLASTIQ_THREADS environment variable.

Exit codes: 0 success, 2 invalid arguments/input, 3 solver failure,
4 failing certificates.
"""

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .discretization import Field, Mesh
from .errors import PlastiqError, ScenarioError, SolverFailure
from .geometry import Polygon, ciarlet_necas_check, hausdorff, jones_verify, sample_polygon
from .scenario import Scenario
from .solver import TimeGrid, Trajectory, run_1d_toy, run_quasistatic
from .verify import verify_all


def _fmt(x):
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def _write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _load_polygon(path):
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    vertices = data["vertices"] if isinstance(data, dict) else data
    return Polygon(vertices)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_run1d(args):
    grid = TimeGrid.uniform(args.T, args.knots)
    rows = run_1d_toy(
        args.lam, grid, p_bounds=(args.p_min, args.p_max),
        search_resolution=args.resolution,
    )
    out = [(r.t, r.ell, r.f, r.p, r.dissipation, r.runaway) for r in rows]
    _write_csv(args.out, ["t", "ell", "f", "p", "dissipation", "runaway_flag"], out)
    print(f"wrote {args.out} ({len(out)} knots)")
    return 0


def _run_scenario(scenario_path):
    scenario = Scenario.from_file(scenario_path)
    initial = scenario.initial_state()
    traj = run_quasistatic(initial, scenario.grid, scenario.models, scenario.solver)
    return scenario, traj


def cmd_run2d(args):
    try:
        scenario, traj = _run_scenario(args.scenario)
    except ScenarioError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return 2
    except SolverFailure as exc:
        print(f"solver failure at knot {exc.knot}: {exc}", file=sys.stderr)
        return 3
    csv_path = args.out_csv or scenario.output_csv or "trajectory.csv"
    json_path = args.out_json or scenario.output_json or "trajectory.json"
    rows = [
        (
            float(traj.grid.knots[i]),
            traj.energies[i].elastic,
            traj.energies[i].plastic,
            traj.energies[i].boundary,
            traj.energies[i].load,
            traj.energies[i].total,
            traj.delta_accumulated[i],
        )
        for i in range(len(traj.grid.knots))
    ]
    _write_csv(
        csv_path,
        ["t", "elastic", "plastic", "boundary", "load", "total", "delta"],
        rows,
    )
    summary = traj.to_json_dict()
    opts = scenario.verify_options
    if opts["semistability"] or opts["energy_inequality"] or opts["stability"]:
        certs = verify_all(
            traj,
            scenario.models,
            semistability=opts["semistability"],
            energy_inequality=opts["energy_inequality"],
            stability=opts["stability"],
            bound=opts["bound"],
            competitors=opts["competitors"],
            seed=scenario.seed,
            energy_ceiling=scenario.solver.energy_ceiling,
        )
        summary["certificates"] = [c.to_dict() for c in certs]
        summary["all_certificates_pass"] = all(c.passed for c in certs)
    with open(json_path, "w", encoding="utf-8", newline="") as fh:
        json.dump(summary, fh, indent=1)
        fh.write("\n")
    print(f"wrote {csv_path} and {json_path}")
    return 0


def cmd_verify(args):
    try:
        scenario = Scenario.from_file(args.scenario)
    except ScenarioError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return 2
    try:
        with open(args.trajectory, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"cannot read trajectory: {exc}", file=sys.stderr)
        return 2
    if not data.get("states"):
        print("empty trajectory", file=sys.stderr)
        return 2
    traj = Trajectory.from_json_dict(data)
    opts = scenario.verify_options
    certs = verify_all(
        traj,
        scenario.models,
        semistability=opts["semistability"],
        energy_inequality=opts["energy_inequality"],
        stability=opts["stability"],
        bound=opts["bound"],
        competitors=opts["competitors"],
        seed=scenario.seed,
        energy_ceiling=scenario.solver.energy_ceiling,
        delta=data.get("delta"),
    )
    print(json.dumps([c.to_dict() for c in certs], indent=1))
    failing = [c for c in certs if not c.passed]
    if failing:
        print(
            f"{len(failing)} failing certificate(s): "
            + ", ".join(sorted({c.kind for c in failing})),
            file=sys.stderr,
        )
        return 4
    return 0


def cmd_geom(args):
    try:
        if args.geom_command == "hausdorff":
            a = sample_polygon(_load_polygon(args.a), args.spacing)
            b = sample_polygon(_load_polygon(args.b), args.spacing)
            report = {
                "distance": hausdorff(a, b),
                "spacing": args.spacing,
                "slack": 2.0 * args.spacing,
            }
        elif args.geom_command == "jones":
            poly = _load_polygon(args.poly)
            rep = jones_verify(
                poly, args.eps, args.delta, sample_pairs=args.pairs, seed=args.seed
            )
            report = rep.to_dict()
        else:  # cn
            with open(args.field, "r", encoding="utf-8") as fh:
                data = json.load(fh)
            mesh = Mesh.from_json_dict(data["mesh"])
            rep = ciarlet_necas_check(Field(np.asarray(data["values"]), mesh), mesh)
            report = rep.to_dict()
    except (PlastiqError, ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"invalid geometry input: {exc}", file=sys.stderr)
        return 2
    print(json.dumps(report, indent=1))
    return 0


def cmd_sweep(args):
    workers = int(os.environ.get("PLASTIQ_THREADS", "0")) or min(4, len(args.scenarios))

    def one(path):
        ns = argparse.Namespace(scenario=path, out_csv=None, out_json=None)
        return path, cmd_run2d(ns)

    results = []
    with ThreadPoolExecutor(max_workers=max(workers, 1)) as pool:
        for path, code in pool.map(one, args.scenarios):
            results.append((path, code))
    worst = 0
    for path, code in results:
        print(f"{path}: exit {code}")
        worst = max(worst, code)
    return worst


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(
        prog="plastiq",
        description="Quasistatic dislocation-free finite plasticity runs and checks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p1 = sub.add_parser("run1d", help="single-material-point 1D evolution")
    p1.add_argument("--lambda", dest="lam", type=float, required=True,
                    help="loading rate: ell(t) = lambda * t")
    p1.add_argument("--T", type=float, required=True, help="time horizon")
    p1.add_argument("--knots", type=int, required=True, help="number of time knots")
    p1.add_argument("--p-max", dest="p_max", type=float, default=20.0)
    p1.add_argument("--p-min", dest="p_min", type=float, default=0.05)
    p1.add_argument("--resolution", type=float, default=1e-4)
    p1.add_argument("--out", default="run1d.csv")
    p1.set_defaults(func=cmd_run1d)

    p2 = sub.add_parser("run2d", help="scenario-driven 2D quasistatic solve")
    p2.add_argument("scenario", help="path to scenario JSON")
    p2.add_argument("--out-csv", default=None)
    p2.add_argument("--out-json", default=None)
    p2.set_defaults(func=cmd_run2d)

    pg = sub.add_parser("geom", help="admissibility geometry reports")
    gsub = pg.add_subparsers(dest="geom_command", required=True)
    gh = gsub.add_parser("hausdorff")
    gh.add_argument("--a", required=True, help="polygon JSON")
    gh.add_argument("--b", required=True, help="polygon JSON")
    gh.add_argument("--spacing", type=float, default=0.01)
    gj = gsub.add_parser("jones")
    gj.add_argument("--poly", required=True, help="polygon JSON")
    gj.add_argument("--eps", type=float, required=True)
    gj.add_argument("--delta", type=float, required=True)
    gj.add_argument("--pairs", type=int, default=500)
    gj.add_argument("--seed", type=int, default=0)
    gc = gsub.add_parser("cn")
    gc.add_argument("--field", required=True, help="JSON with mesh and nodal values")
    pg.set_defaults(func=cmd_geom)

    pv = sub.add_parser("verify", help="re-check certificates on a stored trajectory")
    pv.add_argument("--trajectory", required=True)
    pv.add_argument("--scenario", required=True)
    pv.set_defaults(func=cmd_verify)

    ps = sub.add_parser("sweep", help="run several scenarios concurrently")
    ps.add_argument("scenarios", nargs="+")
    ps.set_defaults(func=cmd_sweep)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except PlastiqError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
