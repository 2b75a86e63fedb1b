"""Command-line entry points.

Every subcommand exits 0 on success. Failures print one JSON object
``{"error": ..., "message": ..., "details": [...]}`` on stderr and exit
nonzero (2 for usage errors, 1 otherwise); files written by the failed
command are removed.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import shutil
import sys
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np

from . import __version__
from .harness import (
    ENV_BACKEND,
    ENV_MAX_ITER,
    ENV_TOL,
    Aspect,
    SolverSettings,
    compare_designs,
    efficiency_fairness_curve,
    export_noise_map,
    load_plan,
    pareto_filter,
    read_points_csv,
    run_sweep,
    select_designs,
    write_curve_csv,
    write_dict_rows,
    write_points_csv,
)
from .optimizer import BACKENDS, Solution, Status, evaluate_solution
from .scenario import (
    AUSTIN_LIKE_SEED,
    ScenarioError,
    austin_like,
    compile_scenario,
    crossing_corridors,
    generate_synthetic,
    load_scenario,
    save_scenario,
)

log = logging.getLogger("uamflow")


class CliError(Exception):
    def __init__(self, message: str, details=(), kind: str = "CliError"):
        super().__init__(message)
        self.details = list(details)
        self.kind = kind


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        _emit_error("UsageError", message, [self.format_usage().strip()])
        sys.exit(2)


def _emit_error(kind: str, message: str, details=()) -> None:
    print(json.dumps({"error": kind, "message": message, "details": list(details)}), file=sys.stderr)


class Outputs:
    """Tracks files written by one command so a failure can remove them."""

    def __init__(self, directory: str | Path):
        self.dir = Path(directory)
        self.created_dir = not self.dir.exists()
        self.dir.mkdir(parents=True, exist_ok=True)
        self.files: list[Path] = []

    def path(self, name: str) -> Path:
        p = self.dir / name
        self.files.append(p)
        return p

    def cleanup(self) -> None:
        for p in self.files:
            p.unlink(missing_ok=True)
        if self.created_dir:
            shutil.rmtree(self.dir, ignore_errors=True)


def _float_arg(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("solver")
    g.add_argument("--tol", type=_float_arg, help=f"CCP stopping tolerance (env {ENV_TOL}, default 1e-4)")
    g.add_argument("--max-iter", type=int, help=f"CCP iteration cap (env {ENV_MAX_ITER}, default 50)")
    g.add_argument("--backend", choices=BACKENDS, help=f"LP backend (env {ENV_BACKEND}, default highs)")


def _add_problem_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("problem parameters (override the scenario defaults)")
    g.add_argument("--omega", type=_float_arg, help="weight on demand fulfillment, in [0, 1]")
    g.add_argument("--delta1", type=_float_arg, help="fairness threshold for demand fulfillment")
    g.add_argument("--delta2", type=_float_arg, help="fairness threshold for noise utility")
    g.add_argument("--m-u", type=_float_arg, help="cap on mean noise increase (dB); 'inf' disables")
    g.add_argument("--p-u", type=_float_arg, help="cap on average extra energy (fraction); 'inf' disables")
    g.add_argument("--epsilon", type=_float_arg, help="capacity safety margin in [0, 1]")
    g.add_argument("--delta-n-max", type=_float_arg, help="maximum allowed noise increase (dB)")


def _problem_overrides(args) -> dict:
    names = ("omega", "delta1", "delta2", "m_u", "p_u", "epsilon", "delta_n_max")
    return {k: getattr(args, k) for k in names if getattr(args, k, None) is not None}


def _solver(args) -> SolverSettings:
    return SolverSettings.from_env(tol=args.tol, max_iter=args.max_iter, backend=args.backend)


def _load(path: str):
    return compile_scenario(load_scenario(path))


def _json_array(a) -> list:
    return [None if (isinstance(v, float) and math.isnan(v)) else v for v in np.asarray(a, dtype=float).tolist()]


def solution_dump(compiled, sol: Solution, params: dict) -> dict:
    out = {
        "scenario": compiled.scenario.name,
        "status": sol.status.value,
        "message": sol.message,
        "iterations": sol.iterations,
        "parameters": {k: (None if isinstance(v, float) and math.isinf(v) else v) for k, v in params.items()},
        "trace": [asdict(it) for it in sol.trace],
    }
    if sol.metrics is not None:
        m = sol.metrics
        out["metrics"] = {
            "objective": m.objective,
            "mean_demand_fulfillment": m.mean_d,
            "mean_noise_increase_db": m.mean_n,
            "max_noise_increase_db": float(m.n_inc.max(initial=0.0)),
            "extra_energy_fraction": m.p_a,
            "gini_demand": m.gini_d,
            "gini_noise": m.gini_n,
            "layer_flow_shares": compiled.layer_flow_shares(m.z).tolist(),
        }
        out["route_flows"] = _json_array(m.z)
        out["link_flows"] = _json_array(m.y)
        out["demand_fulfillment"] = _json_array(m.d)
        out["community_noise_dba"] = _json_array(m.n)
        out["noise_increase_db"] = _json_array(m.n_inc)
    return out


def cmd_solve(args, out: Outputs) -> dict:
    compiled = _load(args.scenario)
    params = dict(asdict(compiled.scenario.problem), **_problem_overrides(args))
    sol = _solver(args).solve(compiled, **params)
    dump = solution_dump(compiled, sol, params)
    out.path("solution.json").write_text(json.dumps(dump, indent=1) + "\n")
    summary = {"status": sol.status.value, "iterations": sol.iterations, **dump.get("metrics", {})}
    if sol.status is Status.Infeasible:
        raise CliError("problem is infeasible", [sol.message], kind="Infeasible")
    return summary


def _write_sweep_tables(points, out: Outputs) -> dict:
    write_points_csv(points, out.path("points.csv"))
    front = pareto_filter(points)
    write_points_csv(front, out.path("pareto.csv"))
    write_curve_csv(efficiency_fairness_curve(points, Aspect.Demand), out.path("curve_demand.csv"))
    write_curve_csv(efficiency_fairness_curve(points, Aspect.Noise), out.path("curve_noise.csv"))
    statuses: dict[str, int] = {}
    for p in points:
        statuses[p.status] = statuses.get(p.status, 0) + 1
    return {"points": len(points), "pareto": len(front), "statuses": statuses}


def cmd_sweep(args, out: Outputs) -> dict:
    plan = load_plan(args.plan)
    overrides = {}
    if args.scenario:
        overrides["scenario"] = args.scenario
    if args.seed is not None:
        overrides["seed"] = args.seed
    solver = SolverSettings.from_env(**{**asdict(plan.solver), **{
        k: v for k, v in (("tol", args.tol), ("max_iter", args.max_iter), ("backend", args.backend)) if v is not None
    }})
    plan = replace(plan, solver=solver, **overrides)
    if plan.scenario is None:
        raise CliError("no scenario: set 'scenario' in the plan or pass --scenario")
    compiled = _load(plan.scenario)
    points = run_sweep(plan, compiled, workers=args.workers)
    return _write_sweep_tables(points, out)


def cmd_pareto(args, out: Outputs) -> dict:
    points = read_points_csv(args.points)
    front = pareto_filter(points)
    write_points_csv(front, out.path("pareto.csv"))
    write_curve_csv(efficiency_fairness_curve(points, Aspect.Demand), out.path("curve_demand.csv"))
    write_curve_csv(efficiency_fairness_curve(points, Aspect.Noise), out.path("curve_noise.csv"))
    return {"points": len(points), "pareto": len(front)}


def cmd_compare(args, out: Outputs) -> dict:
    compiled = _load(args.scenario)
    points = read_points_csv(args.points)
    if args.indices:
        wanted = set(args.indices)
        chosen = [p for p in points if p.index in wanted]
        missing = wanted - {p.index for p in chosen}
        if missing:
            raise CliError("design indices not found in points file", sorted(missing))
    else:
        chosen = select_designs(points, args.designs)
    if not chosen:
        raise CliError("no solved design points to compare")
    cmp = compare_designs(chosen, compiled, solver=_solver(args))
    write_dict_rows(cmp.boxplot, out.path("boxplot.csv"))
    write_dict_rows(cmp.radar, out.path("radar.csv"))
    return {"designs": [p.index for p in chosen], "flagged": sum(not r.ok for r in cmp.runs)}


def cmd_export_noise_map(args, out: Outputs) -> dict:
    compiled = _load(args.scenario)
    if args.solution:
        dump = json.loads(Path(args.solution).read_text())
        if "route_flows" not in dump:
            raise CliError("solution file has no route flows", [dump.get("status", "unknown status")])
        z = np.array(dump["route_flows"], dtype=float)
        if z.size != compiled.topology.n_r:
            raise CliError("solution does not match the scenario",
                           [f"{z.size} route flows, scenario has {compiled.topology.n_r} routes"])
        m = evaluate_solution(compiled.problem(), z)
        sol = Solution(status=Status(dump["status"]), y=m.y, z=m.z, d=m.d, n=m.n, n_inc=m.n_inc,
                       p_a=m.p_a, objective=m.objective, metrics=m)
    else:
        params = dict(asdict(compiled.scenario.problem), **_problem_overrides(args))
        sol = _solver(args).solve(compiled, **params)
    if sol.n is None:
        raise CliError("no flows to map", [sol.message], kind="Infeasible")
    export_noise_map(compiled, sol, out.path("noise_map.geojson"))
    return {"communities": len(compiled.scenario.communities), "status": sol.status.value}


def cmd_gen_scenario(args, out: Outputs) -> dict:
    if args.austin_like:
        scn = austin_like()
    else:
        scn = generate_synthetic(
            seed=args.seed if args.seed is not None else AUSTIN_LIKE_SEED,
            n_vertiports=args.n_vertiports,
            n_layers=args.n_layers,
            n_communities=args.n_communities,
            area=(args.width, args.height),
            n_od_pairs=args.n_od_pairs,
            n_corridors=args.n_corridors,
        )
    path = out.path(args.name)
    save_scenario(scn, path)
    load_scenario(path)
    return {"file": str(path), "vertiports": len(scn.vertiports), "corridors": len(scn.corridors),
            "crossings": len(crossing_corridors(scn))}


def cmd_validate(args, out: Outputs | None) -> dict:
    report = {}
    failed = []
    for f in args.files:
        try:
            scn = load_scenario(f)
        except ScenarioError as exc:
            report[f] = {"ok": False, "errors": exc.errors}
            failed.extend(f"{f}: {e}" for e in exc.errors)
            continue
        compiled = compile_scenario(scn)
        report[f] = {"ok": True, "warnings": compiled.warnings, "routes": compiled.topology.n_r}
    if failed:
        raise CliError(f"{len(failed)} validation error(s)", failed, kind="ValidationError")
    return report


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="uamflow", description="Noise-aware, fairness-aware UAM flow assignment.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log solver progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("solve", help="solve one scenario and dump the solution")
    p.add_argument("--scenario", required=True, help="scenario TOML file")
    p.add_argument("--out", default="out", help="output directory (default: out)")
    p.add_argument("--seed", type=int, help="accepted for interface symmetry; the solve is deterministic")
    _add_problem_flags(p)
    _add_solver_flags(p)

    p = sub.add_parser("sweep", help="run a parameter sweep from a plan file")
    p.add_argument("--plan", required=True, help="sweep plan TOML file")
    p.add_argument("--scenario", help="scenario file (overrides the plan's)")
    p.add_argument("--out", default="sweep_out", help="output directory (default: sweep_out)")
    p.add_argument("--workers", type=int, default=1, help="parallel worker processes (default: 1)")
    p.add_argument("--seed", type=int, help="seed for random restarts (overrides the plan's)")
    _add_solver_flags(p)

    p = sub.add_parser("pareto", help="Pareto set and trade-off curves from a points CSV")
    p.add_argument("--points", required=True, help="points.csv written by 'sweep'")
    p.add_argument("--out", default="pareto_out", help="output directory (default: pareto_out)")

    p = sub.add_parser("compare", help="utilitarian vs egalitarian re-solves of selected designs")
    p.add_argument("--scenario", required=True, help="scenario TOML file")
    p.add_argument("--points", required=True, help="points.csv written by 'sweep'")
    p.add_argument("--designs", type=int, default=8, help="number of Pareto designs to pick (default: 8)")
    p.add_argument("--indices", type=int, nargs="+", help="explicit grid indices instead of automatic picks")
    p.add_argument("--out", default="compare_out", help="output directory (default: compare_out)")
    _add_solver_flags(p)

    p = sub.add_parser("export-noise-map", help="GeoJSON of community noise for a solution")
    p.add_argument("--scenario", required=True, help="scenario TOML file")
    p.add_argument("--solution", help="solution.json from 'solve' (otherwise the scenario is solved)")
    p.add_argument("--out", default="out", help="output directory (default: out)")
    _add_problem_flags(p)
    _add_solver_flags(p)

    p = sub.add_parser("gen-scenario", help="write a synthetic scenario")
    p.add_argument("--austin-like", action="store_true", help="the shipped Austin-like synthetic scenario")
    p.add_argument("--seed", type=int, help=f"random seed (default: {AUSTIN_LIKE_SEED})")
    p.add_argument("--n-vertiports", type=int, default=19)
    p.add_argument("--n-layers", type=int, default=3)
    p.add_argument("--n-communities", type=int, default=292)
    p.add_argument("--n-od-pairs", type=int, default=62)
    p.add_argument("--n-corridors", type=int, default=45)
    p.add_argument("--width", type=_float_arg, default=63_360.0, help="area width in ft")
    p.add_argument("--height", type=_float_arg, default=63_360.0, help="area height in ft")
    p.add_argument("--name", default="scenario.toml", help="output file name (default: scenario.toml)")
    p.add_argument("--out", default=".", help="output directory (default: current directory)")

    p = sub.add_parser("validate", help="check scenario files and list every problem")
    p.add_argument("files", nargs="+", help="scenario TOML files")
    return parser


COMMANDS = {
    "solve": cmd_solve,
    "sweep": cmd_sweep,
    "pareto": cmd_pareto,
    "compare": cmd_compare,
    "export-noise-map": cmd_export_noise_map,
    "gen-scenario": cmd_gen_scenario,
    "validate": cmd_validate,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "workers", 1) < 1:
        _emit_error("UsageError", "--workers must be >= 1")
        return 2
    out = Outputs(args.out) if getattr(args, "out", None) else None
    try:
        result = COMMANDS[args.command](args, out)
    except CliError as exc:
        kind, message, details = exc.kind, str(exc), exc.details
    except ScenarioError as exc:
        kind, message, details = "ValidationError", f"{len(exc.errors)} scenario error(s)", exc.errors
    except (ValueError, OSError, RuntimeError) as exc:
        kind, message, details = type(exc).__name__, str(exc), []
    else:
        print(json.dumps(result, indent=1, default=str))
        return 0
    if out is not None:
        out.cleanup()
    _emit_error(kind, message, details)
    return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
