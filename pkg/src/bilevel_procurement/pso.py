"""Particle swarm over allocation matrices (the buyer's side).

Each particle carries a continuous *shadow* position next to the integer
allocation it stands for. Active entries sit at ``q + fraction``; inactive
ones sit just below the lower bound, at ``q_min - epsilon``, so a small
positive velocity can switch them back on. After every move the position is
floored, entries below ``q_min`` are dropped, and a random repair restores
the demand balance of every item.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .astar import solve_subproblem
from .model import (
    AllocationMatrix,
    InfeasibleSubproblem,
    InstanceError,
    ProcurementInstance,
    SupplierItem,
    SupplierPlan,
    objective_components,
    validate_instance,
)

LowerSolver = Callable[[SupplierItem, int, int, int], SupplierPlan]


class RepairFailed(RuntimeError):
    pass


@dataclass
class SwarmConfig:
    particles: int = 30
    iterations: int = 100
    c1: float = 2.0
    c2: float = 2.0
    w_min: float = 0.2
    w_max: float = 0.9
    velocity_coeff: float = 0.2
    epsilon: float = 1.0
    seed: int = 0
    # evaluation processes; 1 evaluates in-process
    workers: int = 1

    def __post_init__(self):
        if self.particles < 1 or self.iterations < 0:
            raise ValueError("particles must be >= 1 and iterations >= 0")
        if self.c1 < 0 or self.c2 < 0 or self.velocity_coeff <= 0 or self.epsilon <= 0:
            raise ValueError("c1, c2 must be >= 0; velocity_coeff and epsilon > 0")
        if self.w_min > self.w_max:
            raise ValueError("w_min must not exceed w_max")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


class SwarmBounds:
    """Per-element bounds shared by every particle of one instance."""

    def __init__(self, inst: ProcurementInstance, cfg: SwarmConfig):
        b = inst.buyer
        self.demand = b.demand.astype(np.int64)
        self.q_min = b.q_min.astype(np.int64)
        self.q_max = b.q_max.astype(np.int64)
        # a zero lower bound would make the on/off jump meaningless
        self.q_lo = np.maximum(self.q_min, 1)
        self.v_max = cfg.velocity_coeff * (self.q_max - self.q_min).astype(float)
        self.off = self.q_lo - cfg.epsilon
        self.shape = self.q_min.shape


@dataclass
class Particle:
    position: np.ndarray
    velocity: np.ndarray
    alloc: AllocationMatrix
    value: float = math.inf
    pbest_position: np.ndarray | None = None
    pbest_alloc: AllocationMatrix | None = None
    pbest_value: float = math.inf


def inertia(iteration: int, cfg: SwarmConfig) -> float:
    """Inertia weight falling linearly from ``w_max`` at 0 to ``w_min`` at the last iteration."""
    if cfg.iterations == 0:
        return cfg.w_max
    frac = iteration / cfg.iterations
    # weighted form so both endpoints come out exact in floating point
    return cfg.w_min * frac + cfg.w_max * (1.0 - frac)


def particle_rng(seed: int, iteration: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed) & (2**64 - 1), iteration, index]))


def coverable_sums(demand: int, lows, highs) -> list[np.ndarray]:
    """``reach[k][x]``: can suppliers ``k..`` (each 0 or within bounds) sum to ``x``."""
    n = len(lows)
    reach = [np.zeros(demand + 1, dtype=bool) for _ in range(n + 1)]
    reach[n][0] = True
    for k in range(n - 1, -1, -1):
        nxt = reach[k + 1]
        cur = nxt.copy()
        lo, hi = int(lows[k]), int(min(highs[k], demand))
        if lo <= hi:
            cs = np.concatenate([[0], np.cumsum(nxt)])
            x = np.arange(demand + 1)
            a = np.clip(x - hi, 0, None)
            b = x - lo + 1
            ok = b > 0
            cur[ok] |= (cs[np.clip(b[ok], 0, None)] - cs[a[ok]]) > 0
        reach[k] = cur
    return reach


def random_allocation(bounds: SwarmBounds, rng: np.random.Generator) -> AllocationMatrix:
    """Random demand-balanced allocation.

    For every item, suppliers are visited in random order and each gets a
    uniform quantity in ``[q_min, min(q_max, remaining)]`` until the demand
    is met. Quantities that would leave an uncoverable remainder are never
    drawn, so the walk cannot get stuck.
    """
    n, m = bounds.shape
    q = np.zeros((n, m), dtype=np.int64)
    for j in range(m):
        D = int(bounds.demand[j])
        order = rng.permutation(n)
        lows = bounds.q_lo[order, j]
        highs = bounds.q_max[order, j]
        reach = coverable_sums(D, lows, highs)
        if not reach[0][D]:
            raise InstanceError(f"demand uncoverable for item {j}")
        rem = D
        for k, i in enumerate(order):
            if rem == 0:
                break
            lo, hi = int(lows[k]), int(min(highs[k], rem))
            vals = [v for v in range(lo, hi + 1) if reach[k + 1][rem - v]]
            if vals:
                v = vals[int(rng.integers(len(vals)))]
            else:
                v = 0
            q[i, j] = v
            rem -= v
    return AllocationMatrix(q)


def shadow_position(alloc: AllocationMatrix, position: np.ndarray | None, bounds: SwarmBounds) -> np.ndarray:
    """Continuous position for ``alloc``, keeping the fractional part of ``position``."""
    q = alloc.q.astype(float)
    if position is None:
        frac = np.zeros_like(q)
    else:
        frac = position - np.floor(position)
        # tiny negatives round the fraction up to 1.0, which would move to the next integer
        frac[frac >= 1.0] = 0.0
    return np.where(alloc.q > 0, q + frac, bounds.off)


def init_population(inst: ProcurementInstance, cfg: SwarmConfig, bounds: SwarmBounds | None = None) -> list[Particle]:
    bounds = bounds or SwarmBounds(inst, cfg)
    out = []
    for k in range(cfg.particles):
        alloc = random_allocation(bounds, particle_rng(cfg.seed, 0, k))
        pos = shadow_position(alloc, None, bounds)
        out.append(Particle(position=pos, velocity=np.zeros(bounds.shape), alloc=alloc))
    return out


def update_velocity(
    p: Particle,
    gbest: np.ndarray,
    w: float,
    cfg: SwarmConfig,
    rng: np.random.Generator,
    bounds: SwarmBounds,
) -> np.ndarray:
    x = np.maximum(p.position, bounds.off)
    pbest = p.pbest_position if p.pbest_position is not None else x
    r1 = rng.random(bounds.shape)
    r2 = rng.random(bounds.shape)
    v = w * p.velocity + cfg.c1 * r1 * (pbest - x) + cfg.c2 * r2 * (gbest - x)
    return np.clip(v, -bounds.v_max, bounds.v_max)


def update_position(p: Particle) -> np.ndarray:
    return p.position + p.velocity


def dispatch(position: np.ndarray, bounds: SwarmBounds) -> np.ndarray:
    """Integer allocation a position stands for, before demand repair."""
    q = np.floor(position).astype(np.int64)
    q[q < bounds.q_lo] = 0
    return np.minimum(q, bounds.q_max)


def repair_demand(
    position: np.ndarray,
    bounds: SwarmBounds,
    rng: np.random.Generator,
    max_steps: int | None = None,
) -> tuple[AllocationMatrix, np.ndarray]:
    """Balance every item's column by single moves on random suppliers.

    Raising an idle entry jumps it to ``q_min``; lowering an entry at
    ``q_min`` switches it off. Moves that do not overshoot the demand are
    preferred. Returns the allocation and its shadow position.

    Raises
    ------
    RepairFailed
        If a column is still unbalanced after ``max_steps`` moves.
    """
    q = dispatch(position, bounds)
    n, m = bounds.shape
    for j in range(m):
        col = q[:, j]
        lo = bounds.q_lo[:, j]
        hi = bounds.q_max[:, j]
        diff = int(bounds.demand[j] - col.sum())
        cap = max_steps if max_steps is not None else 4 * int(hi.sum() + bounds.demand[j]) + 100
        steps = 0
        while diff != 0:
            if steps >= cap:
                raise RepairFailed(f"item {j}: demand still off by {diff} after {steps} moves")
            steps += 1
            if diff > 0:
                size = np.where(col == 0, lo, 1)
                movable = (col < hi) & ((col > 0) | (lo <= hi))
                sign = 1
            else:
                size = np.where(col == lo, lo, 1)
                movable = col > 0
                sign = -1
            if not movable.any():
                raise RepairFailed(f"item {j}: no supplier can move")
            calm = movable & (size <= abs(diff))
            pool = np.flatnonzero(calm if calm.any() else movable)
            i = pool[int(rng.integers(len(pool)))]
            col[i] += sign * size[i]
            diff -= sign * int(size[i])
    alloc = AllocationMatrix(q)
    return alloc, shadow_position(alloc, position, bounds)


class SubproblemCache:
    """Memo of lower-level solves keyed by ``(supplier, item, q)``; infeasible entries map to ``None``."""

    def __init__(self):
        self.plans: dict = {}
        self.hits = 0
        self.misses = 0

    def get(self, inst: ProcurementInstance, lower_solver: LowerSolver, i: int, j: int, q: int):
        key = (i, j, q)
        if key in self.plans:
            self.hits += 1
            return self.plans[key]
        self.misses += 1
        lane = inst.suppliers[i].item(j)
        try:
            plan = lower_solver(lane, q, inst.horizon, inst.buyer.lt_lower)
        except InfeasibleSubproblem:
            plan = None
        self.plans[key] = plan
        return plan


def evaluate(
    alloc: AllocationMatrix,
    inst: ProcurementInstance,
    lower_solver: LowerSolver,
    cache: SubproblemCache | None = None,
) -> tuple[float, dict]:
    """Buyer objective of ``alloc`` with every allocated pair planned by ``lower_solver``.

    Returns ``(inf, plans)`` when some supplier cannot deliver its share.
    """
    cache = cache if cache is not None else SubproblemCache()
    plans = {}
    for i, j in zip(*np.nonzero(alloc.q)):
        i, j = int(i), int(j)
        plan = cache.get(inst, lower_solver, i, j, int(alloc.q[i, j]))
        if plan is None:
            return math.inf, plans
        plans[(i, j)] = plan
    w1, w2 = inst.buyer.weights
    procurement, shortage = objective_components(alloc, plans, inst.buyer)
    return w1 * procurement + w2 * shortage, plans


def _evaluate_batch(args):
    allocs, inst, lower_solver = args
    cache = SubproblemCache()
    return [evaluate(a, inst, lower_solver, cache)[0] for a in allocs]


@dataclass
class SolveReport:
    alloc: AllocationMatrix | None
    objective: float
    procurement: float
    shortage: float
    plans: dict
    trace: list[float]
    runtime: float
    seed: int
    solver: str = "astar"
    instance: str = ""
    evaluations: int = 0
    cache_hits: int = 0
    reinitialized: int = 0
    # largest |v| - v_max seen; never positive when the clamp holds
    velocity_excess: float = -math.inf
    extras: dict = field(default_factory=dict)


class _Evaluator:
    def __init__(self, inst, lower_solver, workers):
        self.inst = inst
        self.lower_solver = lower_solver
        self.cache = SubproblemCache()
        self.pool = ProcessPoolExecutor(workers) if workers > 1 else None
        self.workers = workers
        self.count = 0

    def values(self, allocs) -> list[float]:
        self.count += len(allocs)
        if self.pool is None:
            return [evaluate(a, self.inst, self.lower_solver, self.cache)[0] for a in allocs]
        chunks = [allocs[k :: self.workers] for k in range(self.workers)]
        parts = list(self.pool.map(_evaluate_batch, [(c, self.inst, self.lower_solver) for c in chunks]))
        out = [0.0] * len(allocs)
        for k, part in enumerate(parts):
            out[k :: self.workers] = part
        return out

    def close(self):
        if self.pool is not None:
            self.pool.shutdown()


def run(
    inst: ProcurementInstance,
    cfg: SwarmConfig | None = None,
    lower_solver: LowerSolver | None = None,
    solver_name: str | None = None,
) -> SolveReport:
    """Run the swarm and return the best allocation found with its plans.

    ``lower_solver(lane, q, horizon, lt_lower)`` plans one supplier/item
    pair; the default is A* with its default beam. Personal and global bests
    only change on strict improvement, after the whole swarm has been
    evaluated, so the global-best trace never increases.
    """
    cfg = cfg or SwarmConfig()
    lower_solver = lower_solver or solve_subproblem
    name = solver_name or getattr(lower_solver, "name", getattr(lower_solver, "__name__", "custom"))
    problems = validate_instance(inst)
    if problems:
        raise InstanceError("; ".join(problems))
    start = time.perf_counter()
    bounds = SwarmBounds(inst, cfg)
    swarm = init_population(inst, cfg, bounds)
    ev = _Evaluator(inst, lower_solver, cfg.workers)
    reinit = 0
    excess = -math.inf
    try:
        for p, val in zip(swarm, ev.values([p.alloc for p in swarm])):
            p.value = p.pbest_value = val
            p.pbest_position = p.position.copy()
            p.pbest_alloc = p.alloc
        g = min(range(len(swarm)), key=lambda k: (swarm[k].value, k))
        g_pos, g_alloc, g_val = swarm[g].position.copy(), swarm[g].alloc, swarm[g].value
        trace = [g_val]
        for it in range(1, cfg.iterations + 1):
            w = inertia(it, cfg)
            for k, p in enumerate(swarm):
                rng = particle_rng(cfg.seed, it, k)
                p.velocity = update_velocity(p, g_pos, w, cfg, rng, bounds)
                excess = max(excess, float(np.max(np.abs(p.velocity) - bounds.v_max)))
                try:
                    p.alloc, p.position = repair_demand(update_position(p), bounds, rng)
                except RepairFailed:
                    reinit += 1
                    p.alloc = random_allocation(bounds, rng)
                    p.position = shadow_position(p.alloc, None, bounds)
                    p.velocity = np.zeros(bounds.shape)
            for p, val in zip(swarm, ev.values([p.alloc for p in swarm])):
                p.value = val
                if val < p.pbest_value:
                    p.pbest_value, p.pbest_position, p.pbest_alloc = val, p.position.copy(), p.alloc
            for p in swarm:
                if p.pbest_value < g_val:
                    g_val, g_pos, g_alloc = p.pbest_value, p.pbest_position.copy(), p.pbest_alloc
            trace.append(g_val)
    finally:
        ev.close()
    if math.isfinite(g_val):
        _, plans = evaluate(g_alloc, inst, lower_solver, ev.cache)
        procurement, shortage = objective_components(g_alloc, plans, inst.buyer)
    else:
        plans, procurement, shortage = {}, math.inf, math.inf
    return SolveReport(
        alloc=g_alloc,
        objective=g_val,
        procurement=procurement,
        shortage=shortage,
        plans=plans,
        trace=trace,
        runtime=time.perf_counter() - start,
        seed=cfg.seed,
        solver=str(name),
        instance=inst.name,
        evaluations=ev.count,
        cache_hits=ev.cache.hits,
        reinitialized=reinit,
        velocity_excess=excess,
    )
