"""Alternative lower-level solvers and the benchmark harness.

``greedy`` follows the child with the lowest heuristic value and never
backtracks. ``sa`` anneals the production schedule found by greedy, with
deliveries re-derived by the shared rule after every move. Both plug into the
same swarm as the A* planner through :func:`make_solver`.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import astuple, dataclass, field, replace

import numpy as np

from .astar import (
    DEFAULT_BEAM,
    SearchNode,
    expand_node,
    is_goal_state,
    reconstruct_plan,
    resolve_stride,
    solve_subproblem,
    start_node,
)
from .delivery import delivery_totals, plan_deliveries, square_sum
from .model import (
    InfeasibleSubproblem,
    ProcurementInstance,
    SupplierItem,
    SupplierPlan,
    plan_from_periods,
    supplier_delay_penalty,
)
from .oracle import EnumerationBudget, brute_force_subproblem
from .pso import SwarmConfig, run

SOLVERS = ("astar", "greedy", "sa", "exact")


def greedy_solve_subproblem(
    lane: SupplierItem,
    q: int,
    horizon: int,
    lt_lower: int,
    stride: int | str = 1,
) -> SupplierPlan:
    """Plan by repeatedly taking the child with the lowest ``h``; ties go to the first generated."""
    if q < 0:
        raise ValueError("order quantity must be non-negative")
    if q == 0:
        return plan_from_periods(lane, 0, horizon, [])
    step = resolve_stride(stride, lane)
    node: SearchNode = start_node(lane, q, horizon, lt_lower)
    if node.h == math.inf:
        raise InfeasibleSubproblem(f"order of {q} exceeds capacity over {horizon} periods")
    while not is_goal_state(node.state, lane):
        children = expand_node(node, lane, horizon, lt_lower, step)
        if not children:
            raise InfeasibleSubproblem(f"greedy dead end at period {node.state.period}")
        node = min(children, key=lambda c: c.h)
    return reconstruct_plan(node, lane, q, horizon)


@dataclass
class SAConfig:
    moves: int = 500
    cooling: float = 0.95
    cooling_every: int = 20
    # None: sized from probe moves so uphill moves start out accepted 90% of the time
    initial_temperature: float | None = None
    probe_moves: int = 50
    target_accept: float = 0.9
    max_step: int | str = "auto"
    seed: int = 0


@dataclass
class SAStats:
    proposed: int = 0
    accepted: int = 0
    accepted_worse: int = 0
    infeasible: int = 0
    initial_temperature: float = 0.0


def lane_seed(seed: int, lane: SupplierItem, *extra) -> int:
    """Stable 64-bit stream id for one subproblem under a master seed."""
    digest = zlib.crc32(repr((astuple(lane), extra)).encode())
    return int(np.random.SeedSequence([int(seed) & (2**64 - 1), digest]).generate_state(1, np.uint64)[0])


class _Schedule:
    """Production schedule with deliveries derived by the shared rule."""

    def __init__(self, lane, q, horizon, lt_lower):
        self.lane, self.q, self.T, self.lt_lower = lane, q, horizon, lt_lower
        self.caps = (lane.ord_units, lane.ot_units)
        self._costs: dict = {}
        self._loads: dict = {}

    def rows(self, prod):
        """Per-period rows, or None if the schedule cannot deliver the order."""
        lane = self.lane
        inv, r = lane.ss, self.q
        out = []
        for t in range(self.T):
            yr, yn = int(prod[t, 0]), int(prod[t, 1])
            d = plan_deliveries(inv, yr + yn, r, t + 1, self.T, lane)
            if d is None:
                return None
            sends, end = d
            shipped = sum(sends)
            out.append((yr, yn, sends, end, supplier_delay_penalty(shipped, t + 1, self.lt_lower, lane.gamma)))
            inv, r = end, r - shipped
        if r != 0 or inv != lane.ss:
            return None
        return out

    def cost(self, prod) -> float:
        """Total cost of the schedule, ``inf`` when it cannot deliver the order."""
        key = prod.tobytes()
        hit = self._costs.get(key)
        if hit is None:
            hit = self._costs[key] = self._cost(prod)
        return hit

    def _cost(self, prod) -> float:
        lane, T = self.lane, self.T
        loads = self._loads
        hpt2 = 0.5 * lane.h * lane.pt
        inv, r = lane.ss, self.q
        total = 0.0
        for t, (yr, yn) in enumerate(prod.tolist()):
            lk = (inv, yr + yn, r, t)
            d = loads.get(lk, False)
            if d is False:
                d = loads[lk] = delivery_totals(inv, yr + yn, r, t + 1, T, lane)
            if d is None:
                return math.inf
            shipped, used = d
            end = inv + yr + yn - shipped
            total += (
                lane.cor * yr
                + lane.cov * yn
                + hpt2 * (square_sum(shipped, used) + end * end - inv * inv)
                + lane.h_prime * end
                + lane.alpha * used
                + lane.beta * shipped
                + supplier_delay_penalty(shipped, t + 1, self.lt_lower, lane.gamma)
                + (lane.sc if yr + yn else 0.0)
            )
            inv, r = end, r - shipped
        if r != 0 or inv != lane.ss:
            return math.inf
        return total

    def neighbour(self, prod, rng, max_step):
        """Move a few units from one (period, mode) slot to another with spare capacity."""
        flat = prod.ravel().tolist()
        src = [k for k, v in enumerate(flat) if v > 0]
        if not src:
            return None
        slack = [self.caps[k % 2] - v for k, v in enumerate(flat)]
        dst = [k for k, v in enumerate(slack) if v > 0]
        if not dst:
            return None
        a = src[int(rng.integers(len(src)))]
        b = dst[int(rng.integers(len(dst)))]
        if a == b:
            return None
        k = min(int(rng.integers(1, max_step + 1)), flat[a], slack[b])
        new = prod.copy()
        new.flat[a] -= k
        new.flat[b] += k
        return new


def sa_solve_subproblem(
    lane: SupplierItem,
    q: int,
    horizon: int,
    lt_lower: int,
    cfg: SAConfig | None = None,
    rng: np.random.Generator | None = None,
    stats: SAStats | None = None,
    stride: int | str = 1,
) -> SupplierPlan:
    """Simulated annealing started from the greedy plan; returns the best plan seen.

    Without an explicit ``rng`` the stream is derived from ``cfg.seed`` and
    the subproblem data, so a call is a pure function of its arguments. An
    initial temperature of 0 turns the search into hill climbing.
    """
    cfg = cfg or SAConfig()
    stats = stats if stats is not None else SAStats()
    start = greedy_solve_subproblem(lane, q, horizon, lt_lower, stride)
    if q == 0 or cfg.moves <= 0:
        return start
    if rng is None:
        rng = np.random.default_rng(lane_seed(cfg.seed, lane, q, horizon, lt_lower))
    sched = _Schedule(lane, q, horizon, lt_lower)
    max_step = cfg.max_step
    if max_step == "auto":
        max_step = max(1, round(0.05 * q))
    cur = np.stack([start.prod_ord, start.prod_ot], axis=1).astype(np.int64)
    cur_cost = sched.cost(cur)
    best, best_cost = cur, cur_cost

    temp = cfg.initial_temperature
    if temp is None:
        ups = []
        for _ in range(cfg.probe_moves):
            nb = sched.neighbour(cur, rng, max_step)
            if nb is None:
                continue
            delta = sched.cost(nb) - cur_cost
            if 0 < delta < math.inf:
                ups.append(delta)
        temp = max(ups) / -math.log(cfg.target_accept) if ups else 1.0
    stats.initial_temperature = temp

    for move in range(1, cfg.moves + 1):
        nb = sched.neighbour(cur, rng, max_step)
        stats.proposed += 1
        if nb is None:
            continue
        nb_cost = sched.cost(nb)
        if nb_cost == math.inf:
            stats.infeasible += 1
            continue
        delta = nb_cost - cur_cost
        if delta <= 0:
            take = True
        elif temp > 0:
            take = rng.random() < math.exp(-delta / temp)
        else:
            take = False
        if take:
            stats.accepted += 1
            if delta > 0:
                stats.accepted_worse += 1
            cur, cur_cost = nb, nb_cost
            if cur_cost < best_cost:
                best, best_cost = cur, cur_cost
        if move % cfg.cooling_every == 0:
            temp *= cfg.cooling
    if best is not None and best_cost < start.total_cost:
        return plan_from_periods(lane, q, horizon, sched.rows(best))
    return start


class _CachedSolver:
    name = "custom"

    def __init__(self):
        self._cache: dict = {}

    def __call__(self, lane: SupplierItem, q: int, horizon: int, lt_lower: int) -> SupplierPlan:
        key = (lane, q, horizon, lt_lower)
        hit = self._cache.get(key)
        if hit is None:
            try:
                hit = self.solve(lane, q, horizon, lt_lower)
            except InfeasibleSubproblem as err:
                hit = err
            self._cache[key] = hit
        if isinstance(hit, InfeasibleSubproblem):
            raise hit
        return hit

    def __getstate__(self):
        # caches stay in the owning process
        state = self.__dict__.copy()
        state["_cache"] = {}
        return state


class AStarSolver(_CachedSolver):
    name = "astar"

    def __init__(self, beam: int | None = DEFAULT_BEAM, stride: int | str = 1):
        super().__init__()
        self.beam, self.stride = beam, stride

    def solve(self, lane, q, horizon, lt_lower):
        return solve_subproblem(lane, q, horizon, lt_lower, beam=self.beam, stride=self.stride)


class GreedySolver(_CachedSolver):
    name = "greedy"

    def __init__(self, stride: int | str = 1):
        super().__init__()
        self.stride = stride

    def solve(self, lane, q, horizon, lt_lower):
        return greedy_solve_subproblem(lane, q, horizon, lt_lower, self.stride)


class SASolver(_CachedSolver):
    name = "sa"

    def __init__(self, cfg: SAConfig | None = None, stride: int | str = 1):
        super().__init__()
        self.cfg, self.stride = cfg or SAConfig(), stride

    def solve(self, lane, q, horizon, lt_lower):
        return sa_solve_subproblem(lane, q, horizon, lt_lower, self.cfg, stride=self.stride)


class ExactSolver(_CachedSolver):
    """Enumeration over the planner's action space; micro sizes only."""

    name = "exact"

    def __init__(self, max_states: int = 10**6):
        super().__init__()
        self.max_states = max_states

    def solve(self, lane, q, horizon, lt_lower):
        res = brute_force_subproblem(lane, q, horizon, lt_lower, EnumerationBudget(self.max_states))
        if not res.feasible:
            raise InfeasibleSubproblem(f"no plan delivers {q} units")
        return res.plan


def make_solver(
    name: str,
    seed: int = 0,
    beam: int | None = DEFAULT_BEAM,
    stride: int | str = 1,
    sa: SAConfig | None = None,
) -> _CachedSolver:
    if name == "astar":
        return AStarSolver(beam, stride)
    if name == "greedy":
        return GreedySolver(stride)
    if name == "sa":
        return SASolver(replace(sa or SAConfig(), seed=seed), stride)
    if name == "exact":
        return ExactSolver()
    raise ValueError(f"unknown solver {name!r}; choose from {', '.join(SOLVERS)}")


def deviation(sol: float, best_found: float) -> float:
    """Relative gap ``(sol - best) / best``; ``nan`` when the best value is not positive."""
    if not best_found > 0:
        return math.nan
    if sol < best_found:
        raise ValueError(f"solution {sol} is below the best found {best_found}")
    return (sol - best_found) / best_found


@dataclass
class ComparisonRow:
    problem: str
    supplier_count: int
    item_count: int
    repetitions: int
    deviation: dict = field(default_factory=dict)
    runtime: dict = field(default_factory=dict)
    objectives: dict = field(default_factory=dict)


def run_seed(seed: int, problem: int, rep: int) -> int:
    return int(np.random.SeedSequence([int(seed) & (2**64 - 1), problem, rep]).generate_state(1)[0])


def compare_suite(
    problems: list[ProcurementInstance],
    algorithms=("astar", "greedy"),
    repetitions: int = 10,
    seed: int = 0,
    swarm: SwarmConfig | None = None,
    beam: int | None = DEFAULT_BEAM,
    stride: int | str = 1,
    sa: SAConfig | None = None,
    progress=None,
) -> list[ComparisonRow]:
    """Run every algorithm on every problem ``repetitions`` times and report mean deviations.

    Repetition ``r`` of a problem uses the same swarm seed for every
    algorithm, so the algorithms differ only in their lower-level solver.
    The reference value is the best objective any run reached on the problem.
    """
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    swarm = swarm or SwarmConfig()
    rows = []
    for pi, inst in enumerate(problems):
        objs = {a: [] for a in algorithms}
        times = {a: [] for a in algorithms}
        shared = {a: make_solver(a, 0, beam, stride, sa) for a in algorithms if a != "sa"}
        for r in range(repetitions):
            s = run_seed(seed, pi, r)
            for a in algorithms:
                solver = shared.get(a) or make_solver(a, s, beam, stride, sa)
                rep = run(inst, replace(swarm, seed=s), solver, solver_name=a)
                objs[a].append(rep.objective)
                times[a].append(rep.runtime)
                if progress is not None:
                    progress(inst.name, a, r, rep)
        best = min(min(v) for v in objs.values())
        row = ComparisonRow(inst.name, inst.supplier_count, inst.item_count, repetitions)
        for a in algorithms:
            devs = [deviation(o, best) if math.isfinite(o) else math.inf for o in objs[a]]
            row.deviation[a] = float(np.mean(devs))
            row.runtime[a] = float(np.mean(times[a]))
            row.objectives[a] = objs[a]
        rows.append(row)
    return rows


def suite_means(rows: list[ComparisonRow]) -> dict:
    """Mean over problems of each algorithm's mean deviation."""
    algs = rows[0].deviation.keys() if rows else ()
    return {a: float(np.mean([r.deviation[a] for r in rows])) for a in algs}
