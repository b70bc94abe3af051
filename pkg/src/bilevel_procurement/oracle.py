"""Exhaustive reference solvers for small instances.

Nothing here imports the A* planner. The lower-level oracle is a memoized
dynamic program over ``(period, inventory, remaining)`` that tries every
ordinary/overtime output pair in every period. In ``"rule"`` mode loads come
from the shared delivery rule, which is the action space the planner
searches. ``"free"`` mode also tries every feasible load split instead and so
gives the true optimum of the lower-level model.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .delivery import plan_deliveries
from .model import (
    AllocationMatrix,
    ProcurementInstance,
    SupplierItem,
    SupplierPlan,
    buyer_objective,
    period_cost,
    plan_from_periods,
    supplier_delay_penalty,
)

MODES = ("rule", "free")


class BudgetExceeded(RuntimeError):
    pass


@dataclass
class EnumerationBudget:
    max_states: int = 10**6
    visited: int = 0
    pruned: int = 0

    def tick(self, n: int = 1) -> None:
        self.visited += n
        if self.visited > self.max_states:
            raise BudgetExceeded(f"budget exceeded: more than {self.max_states} states")


@dataclass
class OracleResult:
    cost: float
    plan: SupplierPlan | None

    @property
    def feasible(self) -> bool:
        return self.plan is not None


@dataclass
class BilevelResult:
    alloc: AllocationMatrix | None
    objective: float
    plans: dict = field(default_factory=dict)
    evaluated: int = 0


def load_splits(total: int, vehicles: int, cap: int):
    """Every way to put ``total`` units on at most ``vehicles`` loads of at most ``cap``.

    Vehicles are interchangeable, so each split is yielded once as a
    non-increasing tuple of length ``vehicles``.
    """
    def rec(left, slots, top):
        if slots == 0:
            if left == 0:
                yield ()
            return
        if left > slots * top:
            return
        for s in range(min(left, top), -1, -1):
            for rest in rec(left - s, slots - 1, s):
                yield (s,) + rest

    yield from rec(total, vehicles, cap)


class _Enumerator:
    def __init__(self, lane: SupplierItem, q: int, horizon: int, lt_lower: int, budget, mode: str):
        if mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        self.lane = lane
        self.q = q
        self.T = horizon
        self.lt_lower = lt_lower
        self.budget = budget if budget is not None else EnumerationBudget()
        self.mode = mode
        self.prodcap = lane.ord_units + lane.ot_units
        self.shipcap = lane.vehicles * lane.send_cap
        self.memo: dict = {}

    def _loads(self, t, inv, production, r):
        lane = self.lane
        if self.mode == "rule":
            d = plan_deliveries(inv, production, r, t, self.T, lane)
            if d is not None:
                yield d
            return
        available = inv + production
        lo = max(0, available - lane.incap)
        hi = min(available, r, self.shipcap)
        for s in range(lo, hi + 1):
            for split in load_splits(s, lane.vehicles, lane.send_cap):
                yield split, available - s

    def cost_to_go(self, t: int, inv: int, r: int) -> float:
        key = (t, inv, r)
        hit = self.memo.get(key)
        if hit is not None:
            return hit[0]
        self.budget.tick()
        lane = self.lane
        need = r + lane.ss - inv
        left = self.T - t
        if t == self.T or need < 0 or need > left * self.prodcap or r > left * self.shipcap:
            done = t == self.T and r == 0 and need == 0
            if not done:
                self.budget.pruned += 1
            self.memo[key] = (0.0 if done else math.inf, None)
            return self.memo[key][0]
        best, arg = math.inf, None
        period = t + 1
        for yr in range(min(need, lane.ord_units) + 1):
            for yn in range(min(need - yr, lane.ot_units) + 1):
                for sends, end in self._loads(period, inv, yr + yn, r):
                    shipped = sum(sends)
                    lodc = supplier_delay_penalty(shipped, period, self.lt_lower, lane.gamma)
                    rest = self.cost_to_go(period, end, r - shipped)
                    if rest == math.inf:
                        continue
                    total = period_cost(lane, yr, yn, sends, inv, end, lodc) + rest
                    if total < best:
                        best, arg = total, (yr, yn, tuple(sends), end, lodc)
        self.memo[key] = (best, arg)
        return best

    def plan(self) -> SupplierPlan | None:
        lane = self.lane
        if self.cost_to_go(0, lane.ss, self.q) == math.inf:
            return None
        rows = []
        key = (0, lane.ss, self.q)
        while key[0] < self.T:
            arg = self.memo[key][1]
            rows.append(arg)
            yr, yn, sends, end, _ = arg
            key = (key[0] + 1, end, key[2] - sum(sends))
        return plan_from_periods(lane, self.q, self.T, rows)


def brute_force_subproblem(
    lane: SupplierItem,
    q: int,
    horizon: int,
    lt_lower: int,
    budget: EnumerationBudget | None = None,
    mode: str = "rule",
) -> OracleResult:
    """Cheapest plan over every production sequence.

    Returns ``OracleResult(inf, None)`` when no sequence delivers ``q`` in
    time. The cost reported is the priced plan's total, so it can be
    compared with other solvers' plans directly.

    Raises
    ------
    BudgetExceeded
        When more than ``budget.max_states`` states would be visited.
    """
    if q < 0:
        raise ValueError("order quantity must be non-negative")
    en = _Enumerator(lane, q, horizon, lt_lower, budget, mode)
    plan = en.plan()
    if plan is None:
        return OracleResult(math.inf, None)
    return OracleResult(plan.total_cost, plan)


def completion_cost_table(
    lane: SupplierItem,
    q: int,
    horizon: int,
    lt_lower: int,
    budget: EnumerationBudget | None = None,
    mode: str = "rule",
) -> dict[tuple[int, int, int], float]:
    """Optimal cost-to-go of every state reachable from the start.

    Keys are ``(period, inventory, remaining)``; dead ends map to ``inf``.
    """
    en = _Enumerator(lane, q, horizon, lt_lower, budget, mode)
    en.cost_to_go(0, lane.ss, q)
    return {k: v[0] for k, v in en.memo.items()}


def feasible_columns(demand: int, q_min, q_max):
    """All allocation vectors for one item: each entry 0 or within its bounds, summing to demand."""
    n = len(q_min)
    choices = [[0] + list(range(max(int(lo), 1), int(hi) + 1)) for lo, hi in zip(q_min, q_max)]
    # suffix maxima prune vectors that can no longer reach the demand
    tail_max = np.concatenate([np.cumsum(np.asarray(q_max, dtype=int)[::-1])[::-1], [0]])

    def rec(i, left):
        if i == n:
            if left == 0:
                yield ()
            return
        if left > tail_max[i]:
            return
        for v in choices[i]:
            if v > left:
                break
            for rest in rec(i + 1, left - v):
                yield (v,) + rest

    return list(rec(0, int(demand)))


def brute_force_bilevel(
    inst: ProcurementInstance,
    budget: EnumerationBudget | None = None,
    mode: str = "rule",
) -> BilevelResult:
    """Best allocation over every demand-feasible matrix, each scored with exact inner plans.

    Ties keep the first matrix in enumeration order; the optimum value does
    not depend on that order.
    """
    budget = budget if budget is not None else EnumerationBudget()
    buyer = inst.buyer
    cols = [feasible_columns(buyer.demand[j], buyer.q_min[:, j], buyer.q_max[:, j]) for j in range(inst.item_count)]
    count = math.prod(len(c) for c in cols)
    if count > budget.max_states:
        raise BudgetExceeded(f"budget exceeded: {count} allocations")
    cache: dict = {}

    def inner(i, j, q):
        key = (i, j, q)
        if key not in cache:
            lane = inst.suppliers[i].item(j)
            cache[key] = brute_force_subproblem(lane, q, inst.horizon, buyer.lt_lower, budget, mode)
        return cache[key]

    best = BilevelResult(None, math.inf)
    for combo in itertools.product(*cols):
        q = np.array(combo, dtype=np.int64).T.reshape(inst.supplier_count, inst.item_count)
        alloc = AllocationMatrix(q)
        plans = {}
        ok = True
        for i, j in zip(*np.nonzero(q)):
            res = inner(int(i), int(j), int(q[i, j]))
            if not res.feasible:
                ok = False
                break
            plans[(int(i), int(j))] = res.plan
        best.evaluated += 1
        if not ok:
            continue
        value = buyer_objective(alloc, plans, buyer)
        if value < best.objective:
            best.alloc, best.objective, best.plans = alloc, value, plans
    return best
