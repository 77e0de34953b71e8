"""Command-line front end.

Subcommands
-----------
``solve``     run the trust-region loop on a built-in or file-based problem,
              emit a summary JSON, an iteration trace CSV and (for the turbo
              car) a trajectory CSV.
``baseline``  exhaustive integer enumeration with fixed-integer polishing.
``stats``     aggregate summary JSONs from a multi-seed campaign into
              min/quartile/max rows.

Problem files are JSON documents::

    {
      "variables":   [{"name": "u1", "lb": 0, "ub": 1, "integer": false}, ...],
      "constraints": [{"coeffs": {"u1": 1, "z1": -1}, "sense": "<=", "rhs": 0}, ...],
      "objective":   {"f1": "(x1 - 0.5)^2", "f2": {"z1": 2.0}},
      "initial_point": [0.2, 1.0]            // optional
    }

``f1`` is an expression over x1, x2, ... referring to variables by their
position in ``variables`` (1-based); it may only touch non-integer
variables.  ``f2`` keys are variable names (or positional ``x<k>`` refs).
Bounds may be omitted or null for unbounded; integer variables need both.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from typing import Optional

import numpy as np

from . import expr as expressions
from .bench import TurboParams, build_complementarity, build_turbo, decode_turbo_trajectory
from .lp import INF, Sense
from .model import (
    LinearConstraint,
    MixedIntegerPolyhedron,
    SmoothObjective,
    check_feasible,
)
from .oracle import enumerate_minlp
from .refine import RefineConfig
from .solver import (
    ClassicUpdate,
    InfeasibleProblemError,
    ResetUpdate,
    SolveResult,
    SolveStatus,
    SolverConfig,
    solve,
)

_EXIT_CODES = {
    SolveStatus.CRITICAL: 0,
    SolveStatus.ITERATION_LIMIT: 2,
    SolveStatus.BACKTRACK_LIMIT: 3,
    SolveStatus.MILP_SUBPROBLEM_INFEASIBLE: 4,
    SolveStatus.NEGATIVE_CRITICALITY: 5,
    SolveStatus.OBJECTIVE_DIVERGING: 6,
}


class ProblemFileError(ValueError):
    pass


def load_problem_file(path: str):
    """Parse a problem JSON into (set, objective, optional start, names)."""
    with open(path, "r", encoding="utf-8") as handle:
        text = handle.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        raise ProblemFileError(
            f"{path}:{err.lineno}:{err.colno}: invalid JSON: {err.msg}"
        ) from None

    def fail(message: str):
        raise ProblemFileError(f"{path}: {message}")

    if not isinstance(doc, dict):
        fail("top level must be an object")
    variables = doc.get("variables")
    if not isinstance(variables, list) or not variables:
        fail("'variables' must be a non-empty list")

    names: list[str] = []
    lo, hi, integer_indices = [], [], []
    for pos, spec in enumerate(variables):
        if not isinstance(spec, dict):
            fail(f"variables[{pos}] must be an object")
        name = spec.get("name", f"x{pos + 1}")
        if name in names:
            fail(f"duplicate variable name {name!r}")
        names.append(name)
        lb = spec.get("lb")
        ub = spec.get("ub")
        lo.append(-INF if lb is None else float(lb))
        hi.append(INF if ub is None else float(ub))
        if spec.get("integer", False):
            integer_indices.append(pos)

    def resolve(key: str, where: str) -> int:
        if key in names:
            return names.index(key)
        if key.startswith("x") and key[1:].isdigit():
            pos = int(key[1:]) - 1
            if 0 <= pos < len(names):
                return pos
        fail(f"{where} references unknown variable {key!r}")

    rows = []
    for r, spec in enumerate(doc.get("constraints", [])):
        if not isinstance(spec, dict):
            fail(f"constraints[{r}] must be an object")
        coeffs_spec = spec.get("coeffs")
        if not isinstance(coeffs_spec, dict) or not coeffs_spec:
            fail(f"constraints[{r}] needs a non-empty 'coeffs' object")
        try:
            sense = Sense(spec.get("sense", "<="))
        except ValueError:
            fail(f"constraints[{r}] has invalid sense {spec.get('sense')!r}")
        coeffs = {}
        for key, value in coeffs_spec.items():
            col = resolve(key, f"constraints[{r}]")
            coeffs[col] = coeffs.get(col, 0.0) + float(value)
        rows.append(LinearConstraint.make(coeffs, sense, float(spec.get("rhs", 0.0))))

    try:
        X = MixedIntegerPolyhedron(len(names), rows, lo, hi, integer_indices)
    except ValueError as err:
        fail(str(err))

    objective_spec = doc.get("objective")
    if not isinstance(objective_spec, dict):
        fail("'objective' must be an object with 'f1' and/or 'f2'")
    f1_text = objective_spec.get("f1", "0")
    try:
        f1 = expressions.parse(f1_text)
    except expressions.ParseError as err:
        fail(f"objective.f1: {err}")
    f2 = np.zeros(len(integer_indices))
    for key, value in (objective_spec.get("f2") or {}).items():
        col = resolve(key, "objective.f2")
        if col not in integer_indices:
            fail(f"objective.f2 references non-integer variable {key!r}")
        f2[integer_indices.index(col)] = float(value)
    try:
        objective = SmoothObjective.from_expression(len(names), integer_indices, f1, f2)
    except ValueError as err:
        fail(f"objective.f1: {err}")

    x0 = doc.get("initial_point")
    if x0 is not None:
        if not isinstance(x0, list) or len(x0) != len(names):
            fail(f"'initial_point' must list {len(names)} numbers")
        x0 = np.asarray([float(v) for v in x0])
    return X, objective, x0, names


def _build_problem(args):
    if args.file:
        return load_problem_file(args.file)
    if args.problem == "turbo":
        params = TurboParams(n_intervals=args.n)
        X, objective = build_turbo(params)
        rng = np.random.default_rng(args.seed)
        x0 = 10.0 * rng.standard_normal(X.n_vars)
        return X, objective, x0, None
    if args.problem == "complementarity":
        X = build_complementarity(args.box)
        f1 = expressions.parse(args.f1 if args.f1 else "x1 + x2")
        objective = SmoothObjective.from_expression(
            X.n_vars, X.integer_indices, f1, [args.f2]
        )
        rng = np.random.default_rng(args.seed)
        x0 = rng.uniform(0.0, args.box, X.n_vars)
        return X, objective, x0, None
    raise ProblemFileError("give either --file or --problem")


def _config_from_args(args) -> SolverConfig:
    if args.tr_rule == "classic":
        rule = ClassicUpdate(args.rho1, args.rho2, args.kappa)
    else:
        rule = ResetUpdate(args.delta_min, args.delta_max, 1.0 / args.kappa)
    return SolverConfig(
        eps=args.eps,
        delta0=args.delta0,
        rho=args.rho,
        kappa=args.kappa,
        kappa_m=args.kappa_m,
        p=1.0 if args.norm == "l1" else INF,
        tr_rule=rule,
        max_outer_iterations=args.max_iters,
        max_backtracks=args.max_backtracks,
        refine_enabled=args.refine == "on",
        refine=RefineConfig(tolerance=args.eps),
        f_floor=args.f_floor,
    )


def _format_value(value) -> str:
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return repr(value)
    if isinstance(value, bool):
        return "1" if value else "0"
    return str(value)


def write_trace_csv(result: SolveResult, path: str):
    """One row per accepted iteration; a final row records the termination
    check when the run ends critical."""
    columns = ["k", "f", "m", "delta", "psi", "a", "rho", "backtracks", "milp_nodes", "refined"]
    lines = [",".join(columns)]
    for record in result.iterations:
        lines.append(
            ",".join(
                _format_value(v)
                for v in (
                    record.k,
                    record.f,
                    record.m,
                    record.delta,
                    record.psi,
                    record.a,
                    record.rho_ratio,
                    record.backtracks,
                    record.milp_nodes,
                    record.refined,
                )
            )
        )
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write("\n".join(lines) + "\n")


def _summary(result: SolveResult, args, n_vars: int, n_int: int) -> dict:
    return {
        "status": result.status.value,
        "objective": result.objective,
        "iterations": len(result.iterations),
        "accepted_steps": result.accepted_count,
        "milp_count": result.milp_count,
        "milp_nodes": result.milp_nodes,
        "refinements": result.refinement_count,
        "projected": result.projected,
        "projection_distance": result.projection_distance,
        "final_psi": result.final_psi,
        "final_delta": result.final_delta,
        "runtime_seconds": result.runtime_seconds,
        "projection_seconds": result.projection_seconds,
        "n_vars": n_vars,
        "n_integer": n_int,
        "problem": args.file or args.problem,
        "seed": args.seed,
        "detail": result.detail,
    }


def _add_problem_arguments(parser: argparse.ArgumentParser):
    parser.add_argument("--file", help="problem JSON file")
    parser.add_argument(
        "--problem", choices=["turbo", "complementarity"], help="built-in instance"
    )
    parser.add_argument("--n", type=int, default=25, help="turbo grid intervals")
    parser.add_argument("--seed", type=int, default=0, help="initial-guess seed")
    parser.add_argument("--box", type=float, default=1.0, help="complementarity box size")
    parser.add_argument("--f1", help="complementarity objective expression over x1, x2")
    parser.add_argument("--f2", type=float, default=0.0, help="complementarity binary cost")


def _add_solver_arguments(parser: argparse.ArgumentParser):
    parser.add_argument("--eps", type=float, default=1e-8)
    parser.add_argument("--delta0", type=float, default=1.0)
    parser.add_argument("--rho", type=float, default=0.1)
    parser.add_argument("--kappa", type=float, default=0.5)
    parser.add_argument("--kappa-m", dest="kappa_m", type=float, default=0.5)
    parser.add_argument("--norm", choices=["l1", "linf"], default="linf")
    parser.add_argument("--tr-rule", choices=["classic", "reset"], default="classic")
    parser.add_argument("--rho1", type=float, default=0.1)
    parser.add_argument("--rho2", type=float, default=0.2)
    parser.add_argument("--delta-min", type=float, default=1e-6)
    parser.add_argument("--delta-max", type=float, default=1e3)
    parser.add_argument("--refine", choices=["on", "off"], default="off")
    parser.add_argument("--max-iters", type=int, default=500)
    parser.add_argument("--max-backtracks", type=int, default=60)
    parser.add_argument("--f-floor", type=float, default=-1e12)


def _cmd_solve(args) -> int:
    X, objective, x0, _names = _build_problem(args)
    if args.x0:
        x0 = np.asarray([float(v) for v in args.x0.split(",")])
        if x0.shape != (X.n_vars,):
            raise ProblemFileError(f"--x0 must list {X.n_vars} numbers")
    if x0 is None:
        x0 = np.zeros(X.n_vars)
    config = _config_from_args(args)
    result = solve(X, objective, x0, config)

    summary = _summary(result, args, X.n_vars, len(X.integer_indices))
    report = check_feasible(X, result.x, 1e-8, 1e-6)
    summary["feasible"] = report.feasible
    text = json.dumps(summary, indent=2, sort_keys=True)
    if args.summary:
        with open(args.summary, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text + "\n")
    print(text)

    if args.trace:
        write_trace_csv(result, args.trace)
    if args.solution:
        with open(args.solution, "w", encoding="utf-8", newline="\n") as handle:
            json.dump({"x": [repr(v) for v in result.x]}, handle)
            handle.write("\n")
    if args.trajectory:
        if args.file or args.problem != "turbo":
            raise ProblemFileError("--trajectory only applies to --problem turbo")
        traj = decode_turbo_trajectory(TurboParams(n_intervals=args.n), result.x)
        columns = ["t", "q", "v", "w", "a", "b"]
        lines = [",".join(columns)]
        for row in zip(*(traj[c] for c in columns)):
            lines.append(",".join(_format_value(float(v)) for v in row))
        with open(args.trajectory, "w", encoding="utf-8", newline="\n") as handle:
            handle.write("\n".join(lines) + "\n")
    return _EXIT_CODES[result.status]


def _cmd_baseline(args) -> int:
    X, objective, _x0, _names = _build_problem(args)
    start = time.perf_counter()
    enumeration = enumerate_minlp(
        X,
        objective,
        combo_limit=args.combo_limit,
        starts_per_combo=args.starts,
        cfg=RefineConfig(tolerance=args.eps),
        seed=args.seed,
    )
    elapsed = time.perf_counter() - start
    payload = {
        "total_combinations": enumeration.total_count,
        "feasible_combinations": enumeration.feasible_count,
        "objective": enumeration.objective if enumeration.x is not None else None,
        "runtime_seconds": elapsed,
        "table": [
            {
                "combination": list(combo),
                "feasible": feasible,
                "objective": None if math.isnan(best) else best,
            }
            for combo, feasible, best in enumeration.table
        ],
    }
    text = json.dumps(payload, indent=2, sort_keys=True)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text + "\n")
    print(text)
    return 0 if enumeration.x is not None else 1


def _quartiles(values: list[float]) -> dict:
    arr = np.asarray(values, dtype=float)
    return {
        "min": float(np.min(arr)),
        "q25": float(np.percentile(arr, 25)),
        "median": float(np.median(arr)),
        "q75": float(np.percentile(arr, 75)),
        "max": float(np.max(arr)),
    }


def _cmd_stats(args) -> int:
    summaries = []
    for path in args.summaries:
        with open(path, "r", encoding="utf-8") as handle:
            summaries.append(json.load(handle))
    if not summaries:
        print("no summaries given", file=sys.stderr)
        return 1
    fields = ["objective", "iterations", "milp_count", "runtime_seconds"]
    table = {
        field: _quartiles([s[field] for s in summaries if field in s]) for field in fields
    }
    table["runs"] = len(summaries)
    table["critical_runs"] = sum(1 for s in summaries if s.get("status") == "critical")
    print(json.dumps(table, indent=2, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="smil",
        description="Trust-region minimization over mixed-integer linear constraints",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    solve_parser = sub.add_parser("solve", help="run the solver")
    _add_problem_arguments(solve_parser)
    _add_solver_arguments(solve_parser)
    solve_parser.add_argument("--x0", help="comma-separated starting point")
    solve_parser.add_argument("--trace", help="write the iteration CSV here")
    solve_parser.add_argument("--summary", help="write the summary JSON here")
    solve_parser.add_argument("--solution", help="write the final point here (JSON)")
    solve_parser.add_argument("--trajectory", help="write the turbo trajectory CSV here")
    solve_parser.set_defaults(handler=_cmd_solve)

    baseline_parser = sub.add_parser("baseline", help="integer enumeration baseline")
    _add_problem_arguments(baseline_parser)
    baseline_parser.add_argument("--combo-limit", type=int, default=4096)
    baseline_parser.add_argument("--starts", type=int, default=10)
    baseline_parser.add_argument("--eps", type=float, default=1e-8)
    baseline_parser.add_argument("--out", help="write the enumeration JSON here")
    baseline_parser.set_defaults(handler=_cmd_baseline)

    stats_parser = sub.add_parser("stats", help="aggregate summary JSONs")
    stats_parser.add_argument("summaries", nargs="+", help="summary JSON files")
    stats_parser.set_defaults(handler=_cmd_stats)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except (ProblemFileError, InfeasibleProblemError, expressions.ParseError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
