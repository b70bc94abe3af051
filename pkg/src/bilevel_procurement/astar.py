"""A* search over period-by-period production decisions for one supplier and item.

A state is ``(period, inventory, remaining)`` after a period closes, with
``remaining`` the undelivered part of the order. Production still owed is
``remaining + ss - inventory``: the order must be produced in full so the
safety stock is back in the store when the horizon ends. Children branch on
ordinary and overtime output; loads follow :mod:`.delivery`.

``g`` is the literal supplier cost of the periods so far. The heuristic adds
the exact rest of the telescoping stock term, ``H*PT/2 * (ss^2 - I^2)``, to a
lower bound on every other future cost term, so it can be negative but never
overestimates.
"""

from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Hashable, Iterable, NamedTuple

from .delivery import delivery_totals, split_evenly, square_sum
from .model import (
    InfeasibleSubproblem,
    SupplierItem,
    SupplierPlan,
    plan_from_periods,
)

INF = math.inf
DEFAULT_BEAM = 50
AUTO_LEVELS = 8


class PlannerState(NamedTuple):
    period: int
    inventory: int
    remaining: int


class SearchNode:
    __slots__ = ("state", "g", "h", "action", "parent", "seq")

    def __init__(self, state, g: float, h: float, action=None, parent: "SearchNode | None" = None):
        self.state = state
        self.g = g
        self.h = h
        self.action = action
        self.parent = parent
        self.seq = -1

    @property
    def f(self) -> float:
        return self.g + self.h

    def __repr__(self):
        return f"SearchNode({self.state!r}, g={self.g:.6g}, h={self.h:.6g})"


class OpenList:
    """Priority queue ordered by ``(f, insertion order)`` with an optional size cap."""

    def __init__(self, capacity: int | None = None):
        if capacity is not None and capacity < 1:
            raise ValueError("open-list capacity must be positive")
        self.capacity = capacity
        self._heap: list = []
        self._members: set[int] = set()
        self._counter = itertools.count()

    def __len__(self):
        return len(self._members)

    def __bool__(self):
        return bool(self._members)

    def push(self, node: SearchNode) -> None:
        node.seq = next(self._counter)
        heapq.heappush(self._heap, (node.f, node.seq, node))
        self._members.add(node.seq)

    def pop(self) -> SearchNode:
        while self._heap:
            _, seq, node = heapq.heappop(self._heap)
            if seq in self._members:
                self._members.remove(seq)
                return node
        raise IndexError("pop from an empty open list")

    def discard(self, node: SearchNode) -> None:
        self._members.discard(node.seq)

    def truncate(self) -> list[SearchNode]:
        """Keep the ``capacity`` lowest-f nodes; return the dropped ones."""
        if self.capacity is None or len(self._members) <= self.capacity:
            return []
        live = sorted(e for e in self._heap if e[1] in self._members)
        keep, drop = live[: self.capacity], live[self.capacity :]
        self._heap = keep
        self._members = {e[1] for e in keep}
        return [e[2] for e in drop]

    def nodes(self) -> list[SearchNode]:
        return [e[2] for e in sorted(e for e in self._heap if e[1] in self._members)]


@dataclass
class SearchStats:
    expanded: int = 0
    generated: int = 0
    max_open: int = 0
    # cleared when some child has a lower f than its parent
    consistent: bool = True


def best_first_search(
    start: SearchNode,
    expand: Callable[[SearchNode], Iterable[SearchNode]],
    is_goal: Callable[[SearchNode], bool],
    capacity: int | None = None,
    key: Callable[[SearchNode], Hashable] | None = None,
    trace: list | None = None,
    stats: SearchStats | None = None,
) -> SearchNode | None:
    """A* with an optional cap on the open list.

    The goal test runs when a node is selected, not when it is generated.
    With ``key`` set, a child reaching an already-seen state is kept only if
    it improves that state's best ``g``; closed states are reopened on
    improvement, which keeps the search exact for admissible but
    inconsistent heuristics. ``trace`` receives ``(open, closed)`` snapshots
    taken before every selection.
    """
    stats = stats if stats is not None else SearchStats()
    open_list = OpenList(capacity)
    open_list.push(start)
    best_g: dict = {}
    in_open: dict = {}
    if key is not None:
        k = key(start)
        best_g[k] = start.g
        in_open[k] = start
    closed: list[SearchNode] = []
    while open_list:
        if trace is not None:
            trace.append((tuple(open_list.nodes()), tuple(closed)))
        node = open_list.pop()
        if key is not None:
            k = key(node)
            if in_open.get(k) is node:
                del in_open[k]
        if is_goal(node):
            return node
        if trace is not None:
            closed.append(node)
        stats.expanded += 1
        parent_f = node.f
        for child in expand(node):
            stats.generated += 1
            if child.f < parent_f - 1e-9:
                stats.consistent = False
            if key is not None:
                k = key(child)
                old = best_g.get(k)
                if old is not None and old <= child.g:
                    continue
                best_g[k] = child.g
                prev = in_open.get(k)
                if prev is not None:
                    open_list.discard(prev)
                in_open[k] = child
            open_list.push(child)
        open_list.truncate()
        stats.max_open = max(stats.max_open, len(open_list))
    return None


class _Context:
    __slots__ = ("ord_units", "ot_units", "prodcap", "shipcap", "hpt2", "cmin", "ot_premium")

    def __init__(self, lane: SupplierItem):
        self.ord_units = lane.ord_units
        self.ot_units = lane.ot_units
        self.prodcap = self.ord_units + self.ot_units
        self.shipcap = lane.vehicles * lane.send_cap
        self.hpt2 = 0.5 * lane.h * lane.pt
        # overtime is never cheaper in practice; min() keeps the bound safe anyway
        self.cmin = min(lane.cor, lane.cov)
        self.ot_premium = max(0.0, lane.cov - lane.cor)


@lru_cache(maxsize=4096)
def _context(lane: SupplierItem) -> _Context:
    return _Context(lane)


def _load_bound(r: int, left: int, lane: SupplierItem, c: _Context) -> float:
    """Least trip plus in-period holding cost of shipping ``r`` units in ``left`` periods.

    With ``L`` loads, ``sum send^2 >= r^2 / L``, and ``L`` lies between the
    fewest loads the send cap allows and ``min(left * V, r)``. The bound
    minimises ``alpha*L + H*PT/2 * r^2 / L`` over real ``L`` in that range.
    """
    l_min = -(-r // lane.send_cap)
    l_max = max(l_min, min(left * lane.vehicles, r))
    if lane.alpha > 0 and c.hpt2 > 0:
        L = min(max(r * math.sqrt(c.hpt2 / lane.alpha), l_min), l_max)
    else:
        L = l_max if lane.alpha <= 0 else l_min
    return lane.alpha * L + c.hpt2 * r * r / L


def resolve_stride(stride: int | str, lane: SupplierItem) -> int:
    """Branching step; ``"auto"`` gives roughly eight levels per production mode."""
    if stride == "auto":
        return max(1, math.ceil(max(lane.ord_units, lane.ot_units) / AUTO_LEVELS))
    stride = int(stride)
    if stride < 1:
        raise ValueError("stride must be >= 1")
    return stride


def _levels(top: int, stride: int) -> list[int]:
    if top <= 0:
        return [0]
    out = list(range(0, top + 1, stride))
    if out[-1] != top:
        out.append(top)
    return out


def heuristic_cost(state: PlannerState, lane: SupplierItem, lt_lower: int, horizon: int) -> float:
    """Optimistic cost to finish the order from ``state``.

    Future production is priced at the cheaper production rate plus the
    overtime that ordinary capacity cannot avoid, setups at the fewest
    production periods that can cover it, trips and in-period holding by
    :func:`_load_bound`, and lateness along the earliest shipping profile
    that production and fleet capacity allow. Holding between periods is
    only charged for the safety stock left at the end of the horizon.
    Returns ``inf`` for states that cannot finish within the horizon.
    """
    t, inv, r = state
    ss = lane.ss
    need = r + ss - inv
    if r == 0 and need == 0:
        return 0.0
    left = horizon - t
    if left <= 0 or need < 0:
        return INF
    c = _context(lane)
    if need > left * c.prodcap or r > left * c.shipcap:
        return INF
    h = c.hpt2 * (ss * ss - inv * inv) + lane.h_prime * ss
    if need:
        future_days = -(-need // c.prodcap)
        h += c.cmin * need + future_days * lane.sc
        if c.ot_premium > 0:
            h += c.ot_premium * max(0, need - left * c.ord_units)
    if r:
        h += lane.beta * r + _load_bound(r, left, lane, c)
        if lane.gamma > 0 and horizon > lt_lower:
            shipped = 0
            lateness = 0
            for k in range(1, left + 1):
                cum = min(r, k * c.shipcap, inv + min(need, k * c.prodcap))
                lag = t + k - lt_lower
                if lag > 0:
                    lateness += lag * (cum - shipped)
                shipped = cum
                if shipped >= r:
                    break
            h += lane.gamma * lateness
    return h


def is_goal_state(state: PlannerState, lane: SupplierItem) -> bool:
    return state.remaining == 0 and state.inventory == lane.ss


def expand_node(
    node: SearchNode,
    lane: SupplierItem,
    horizon: int,
    lt_lower: int,
    stride: int = 1,
    h_cache: dict | None = None,
) -> list[SearchNode]:
    """Children of ``node``: one per ordinary/overtime output pair.

    Overtime is only opened once ordinary output reaches its ceiling for
    this period. Children that cannot finish the order are dropped. A child
    that completes the order early also carries the idle periods' holding
    charge, so its ``g`` is the cost of a full-horizon plan. The action
    stored on a child is ``(yr, yn, shipped, vehicles, end, lodc)``.
    """
    c = _context(lane)
    t0, inv, r = node.state
    t = t0 + 1
    ss = lane.ss
    need = r + ss - inv
    yr_top = min(need, c.ord_units)
    hpt2, hp = c.hpt2, lane.h_prime
    late = lane.gamma * (t - lt_lower) if t > lt_lower else 0.0
    base_g = node.g - hpt2 * inv * inv
    children: list[SearchNode] = []
    for yr in _levels(yr_top, stride):
        yn_options = _levels(min(need - yr, c.ot_units), stride) if yr == yr_top else (0,)
        for yn in yn_options:
            d = delivery_totals(inv, yr + yn, r, t, horizon, lane)
            if d is None:
                continue
            shipped, used = d
            end = inv + yr + yn - shipped
            state = PlannerState(t, end, r - shipped)
            if h_cache is None:
                h = heuristic_cost(state, lane, lt_lower, horizon)
            else:
                h = h_cache.get(state)
                if h is None:
                    h = h_cache[state] = heuristic_cost(state, lane, lt_lower, horizon)
            if h == INF:
                continue
            lodc = late * shipped
            g = (
                base_g
                + lane.cor * yr
                + lane.cov * yn
                + hpt2 * (square_sum(shipped, used) + end * end)
                + hp * end
                + lane.alpha * used
                + lane.beta * shipped
                + lodc
            )
            if yr + yn:
                g += lane.sc
            if shipped == r and end == ss and t < horizon:
                g += hp * ss * (horizon - t)
            children.append(SearchNode(state, g, h, (yr, yn, shipped, used, end, lodc), node))
    return children


def start_node(lane: SupplierItem, q: int, horizon: int, lt_lower: int) -> SearchNode:
    state = PlannerState(0, lane.ss, q)
    return SearchNode(state, 0.0, heuristic_cost(state, lane, lt_lower, horizon))


def reconstruct_plan(goal: SearchNode, lane: SupplierItem, q: int, horizon: int) -> SupplierPlan:
    """Walk the parent chain of ``goal`` and emit the full-horizon plan."""
    if not is_goal_state(goal.state, lane):
        raise ValueError("reconstruct_plan needs a goal node")
    rows = []
    node = goal
    while node.parent is not None:
        if node.action is None:
            raise RuntimeError("broken parent chain: node without an action")
        yr, yn, shipped, used, end, lodc = node.action
        rows.append((yr, yn, split_evenly(shipped, used, lane.vehicles), end, lodc))
        node = node.parent
    if node.state.period != 0:
        raise RuntimeError("broken parent chain: root is not the start state")
    rows.reverse()
    return plan_from_periods(lane, q, horizon, rows)


def solve_subproblem(
    lane: SupplierItem,
    q: int,
    horizon: int,
    lt_lower: int,
    beam: int | None = DEFAULT_BEAM,
    stride: int | str = 1,
    stats: SearchStats | None = None,
) -> SupplierPlan:
    """Cheapest plan for delivering ``q`` units found by (bounded) A*.

    ``beam=None`` leaves the open list unbounded; with ``stride=1`` the result
    is then the exact optimum over the branching scheme.

    Raises
    ------
    InfeasibleSubproblem
        If no plan delivers ``q`` within ``horizon`` periods.
    """
    if q < 0:
        raise ValueError("order quantity must be non-negative")
    if q == 0:
        return plan_from_periods(lane, 0, horizon, [])
    step = resolve_stride(stride, lane)
    start = start_node(lane, q, horizon, lt_lower)
    if start.h == INF:
        raise InfeasibleSubproblem(f"order of {q} exceeds capacity over {horizon} periods")
    h_cache: dict = {}
    goal = best_first_search(
        start,
        lambda n: expand_node(n, lane, horizon, lt_lower, step, h_cache),
        lambda n: is_goal_state(n.state, lane),
        capacity=beam,
        key=lambda n: n.state,
        stats=stats,
    )
    if goal is None:
        raise InfeasibleSubproblem(f"open list exhausted before delivering {q} units")
    return reconstruct_plan(goal, lane, q, horizon)
