"""Command-line entry point.

Exit codes: 0 success, 1 invalid instance, 2 infeasible, 3 enumeration
budget exceeded, 64 usage error. ``BILEVEL_SEED`` supplies the seed when
``--seed`` is not given.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

from .astar import DEFAULT_BEAM, PlannerState, SearchStats, heuristic_cost, solve_subproblem
from .baselines import SOLVERS, SAConfig, compare_suite, make_solver, suite_means
from .instances import (
    InstanceFormatError,
    generate_instance,
    instance_to_dict,
    micro_suite,
    read_instance,
    write_instance,
)
from .model import InfeasibleSubproblem, InstanceError, check_plan_feasible, validate_instance
from .oracle import BudgetExceeded, EnumerationBudget, brute_force_subproblem, completion_cost_table
from .pso import SwarmConfig, run
from .reports import (
    parse_grid,
    run_sweep,
    with_weights_and_gamma,
    write_compare_report,
    write_solve_report,
    write_sweep_report,
)

EXIT_OK, EXIT_INVALID, EXIT_INFEASIBLE, EXIT_BUDGET, EXIT_USAGE = 0, 1, 2, 3, 64


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _beam(text: str):
    if text == "unbounded":
        return None
    k = int(text)
    if k < 1:
        raise argparse.ArgumentTypeError("beam must be a positive integer or 'unbounded'")
    return k


def _stride(text: str):
    if text == "auto":
        return text
    k = int(text)
    if k < 1:
        raise argparse.ArgumentTypeError("stride must be a positive integer or 'auto'")
    return k


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("BILEVEL_SEED")
    return int(env) if env else 0


def _add_swarm_flags(p, particles=30, iters=100):
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--beam", type=_beam, default=DEFAULT_BEAM, help="open-list cap, or 'unbounded'")
    p.add_argument("--stride", type=_stride, default=1, help="production branching step, or 'auto'")
    p.add_argument("--particles", type=int, default=particles)
    p.add_argument("--iters", type=int, default=iters)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--sa-moves", type=int, default=SAConfig.moves)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bilevel-procure", description="Bi-level order allocation with swarm and A* planning.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("solve", help="allocate one instance")
    p.add_argument("instance")
    p.add_argument("--solver", choices=SOLVERS, default="astar")
    _add_swarm_flags(p)
    p.add_argument("--w1", type=float, default=None, help="procurement weight; the shortage weight is 1 - w1")
    p.add_argument("--gamma", type=float, default=None, help="override every supplier's delay factor")
    p.add_argument("--out", default=None)

    p = sub.add_parser("generate", help="write a random instance")
    p.add_argument("--suppliers", type=int, required=True)
    p.add_argument("--items", type=int, required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)

    p = sub.add_parser("compare", help="benchmark solvers over a directory of instances")
    p.add_argument("--suite", required=True)
    p.add_argument("--reps", type=int, default=10)
    p.add_argument("--solvers", default="astar,greedy")
    _add_swarm_flags(p)
    p.add_argument("--out", default=None)

    p = sub.add_parser("sweep", help="objective over a w1 x gamma grid")
    p.add_argument("instance")
    p.add_argument("--w1", default="0:1:0.1")
    p.add_argument("--gamma", default="0.8:0.97:0.01")
    p.add_argument("--solver", choices=SOLVERS, default="astar")
    _add_swarm_flags(p, particles=10, iters=10)
    p.add_argument("--out", default=None)

    p = sub.add_parser("audit", help="check A* against the enumeration oracle")
    p.add_argument("--micro-suite", action="store_true", required=True)
    p.add_argument("--seeds", type=int, default=200)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--max-states", type=int, default=10**6)
    return parser


def _swarm(args, seed) -> SwarmConfig:
    return SwarmConfig(particles=args.particles, iterations=args.iters, seed=seed, workers=args.workers)


def _solver(args, name, seed):
    return make_solver(name, seed, beam=args.beam, stride=args.stride, sa=SAConfig(moves=args.sa_moves))


def _load(path):
    inst = read_instance(path)
    problems = validate_instance(inst)
    if problems:
        raise InstanceError("\n".join(problems))
    return inst


def cmd_solve(args) -> int:
    inst = _load(args.instance)
    if args.w1 is not None or args.gamma is not None:
        w1 = inst.buyer.weights[0] if args.w1 is None else args.w1
        inst = with_weights_and_gamma(inst, w1, args.gamma)
        problems = validate_instance(inst)
        if problems:
            raise InstanceError("\n".join(problems))
    seed = _seed(args)
    report = run(inst, _swarm(args, seed), _solver(args, args.solver, seed), solver_name=args.solver)
    write_solve_report(report, args.out)
    if not math.isfinite(report.objective):
        print("no allocation could be delivered within the horizon", file=sys.stderr)
        return EXIT_INFEASIBLE
    return EXIT_OK


def cmd_generate(args) -> int:
    if args.suppliers < 1 or args.items < 1:
        print("--suppliers and --items must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    inst = generate_instance(args.suppliers, args.items, _seed(args))
    if args.out is None:
        sys.stdout.write(json.dumps(instance_to_dict(inst), indent=2) + "\n")
    else:
        write_instance(inst, args.out)
    return EXIT_OK


def cmd_compare(args) -> int:
    files = sorted(Path(args.suite).glob("*.json"))
    if not files:
        print(f"no *.json instances in {args.suite}", file=sys.stderr)
        return EXIT_INVALID
    problems = [_load(f) for f in files]
    algs = [a.strip() for a in args.solvers.split(",") if a.strip()]
    unknown = [a for a in algs if a not in SOLVERS]
    if unknown:
        print(f"unknown solver(s): {', '.join(unknown)}", file=sys.stderr)
        return EXIT_USAGE
    rows = compare_suite(
        problems,
        algs,
        args.reps,
        _seed(args),
        _swarm(args, 0),
        beam=args.beam,
        stride=args.stride,
        sa=SAConfig(moves=args.sa_moves),
    )
    write_compare_report(rows, args.out)
    for a, v in suite_means(rows).items():
        print(f"{a}: mean deviation {v:.6f}", file=sys.stderr)
    return EXIT_OK


def cmd_sweep(args) -> int:
    inst = _load(args.instance)
    try:
        w1s, gammas = parse_grid(args.w1), parse_grid(args.gamma)
    except ValueError as err:
        print(err, file=sys.stderr)
        return EXIT_USAGE
    if any(not 0 <= w <= 1 for w in w1s):
        print("w1 values must lie in [0, 1]", file=sys.stderr)
        return EXIT_USAGE
    seed = _seed(args)
    rows = run_sweep(inst, w1s, gammas, _swarm(args, seed), _solver(args, args.solver, seed))
    write_sweep_report(rows, args.out)
    return EXIT_OK


def audit_micro_suite(count: int, seed: int = 0, max_states: int = 10**6, out=None) -> bool:
    """A* against the oracle: equal costs, feasible plans and no overestimating ``h``."""
    out = out if out is not None else sys.stdout
    mismatches = overestimates = infeasible_plans = 0
    for k, (lane, q, T, lt) in enumerate(micro_suite(count, seed)):
        ref = brute_force_subproblem(lane, q, T, lt, EnumerationBudget(max_states))
        try:
            plan = solve_subproblem(lane, q, T, lt, beam=None, stride=1, stats=SearchStats())
            cost = plan.total_cost
            if check_plan_feasible(plan, lane, 0, q, T):
                infeasible_plans += 1
        except InfeasibleSubproblem:
            cost = math.inf
        if not (cost == ref.cost or abs(cost - ref.cost) <= 1e-9 * max(1.0, abs(ref.cost))):
            mismatches += 1
            print(f"instance {k}: A* {cost} vs oracle {ref.cost}", file=out)
        table = completion_cost_table(lane, q, T, lt, EnumerationBudget(max_states))
        for s, v in table.items():
            if heuristic_cost(PlannerState(*s), lane, lt, T) > v + 1e-9 * max(1.0, abs(v)):
                overestimates += 1
    print(f"exactness mismatches: {mismatches}/{count}", file=out)
    print(f"heuristic overestimates: {overestimates}", file=out)
    print(f"infeasible plans: {infeasible_plans}", file=out)
    return mismatches == 0 and overestimates == 0 and infeasible_plans == 0


def cmd_audit(args) -> int:
    ok = audit_micro_suite(args.seeds, _seed(args), args.max_states)
    return EXIT_OK if ok else EXIT_INVALID


COMMANDS = {"solve": cmd_solve, "generate": cmd_generate, "compare": cmd_compare, "sweep": cmd_sweep, "audit": cmd_audit}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (InstanceFormatError, InstanceError) as err:
        print(err, file=sys.stderr)
        return EXIT_INVALID
    except FileNotFoundError as err:
        print(err, file=sys.stderr)
        return EXIT_INVALID
    except InfeasibleSubproblem as err:
        print(err, file=sys.stderr)
        return EXIT_INFEASIBLE
    except BudgetExceeded as err:
        print(err, file=sys.stderr)
        return EXIT_BUDGET


if __name__ == "__main__":
    sys.exit(main())
