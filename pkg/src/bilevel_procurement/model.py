"""Problem data, cost laws and feasibility checks for the buyer/supplier model.

The buyer (leader) splits the demand of every item over suppliers. Each
supplier (follower) then plans production, storage and deliveries for every
allocated item over a finite horizon. Subproblems decompose per
``(supplier, item)`` pair, so most lower-level code works on a flat
:class:`SupplierItem` record.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

DEFAULT_WEIGHTS = (0.4, 0.6)

# guards floor(capacity / processing_time) against 4.999999... artefacts
_FLOOR_EPS = 1e-9


class InstanceError(ValueError):
    """Raised when an instance cannot be used (invalid data or unfillable demand)."""


class InfeasibleSubproblem(RuntimeError):
    """A supplier cannot deliver its allocated quantity within the horizon."""


class PlanMismatch(ValueError):
    """A plan does not deliver the quantity the allocation asks for."""


def unit_capacity(time_capacity: float, processing_time: float) -> int:
    """Whole items that fit in ``time_capacity`` time units."""
    if time_capacity <= 0:
        return 0
    return int(math.floor(time_capacity / processing_time + _FLOOR_EPS))


@dataclass(eq=False)
class BuyerParams:
    demand: np.ndarray  # (m,) int
    lt_lower: int
    lt_upper: int
    q_min: np.ndarray  # (n, m) int
    q_max: np.ndarray  # (n, m) int
    delay_factor: float  # lambda
    ordering_cost: np.ndarray  # (n, m)
    weights: tuple[float, float] = DEFAULT_WEIGHTS

    def __post_init__(self):
        self.demand = np.asarray(self.demand, dtype=np.int64)
        self.q_min = np.atleast_2d(np.asarray(self.q_min, dtype=np.int64))
        self.q_max = np.atleast_2d(np.asarray(self.q_max, dtype=np.int64))
        self.ordering_cost = np.atleast_2d(np.asarray(self.ordering_cost, dtype=float))
        self.weights = (float(self.weights[0]), float(self.weights[1]))


@dataclass(frozen=True)
class SupplierItem:
    """Scalar parameters of one supplier for one item."""

    cor: float
    cov: float
    orc: float
    ovc: float
    pt: float
    h: float
    h_prime: float
    sc: float
    ss: int
    vcap: int
    incap: int
    vehicles: int
    alpha: float
    beta: float
    gamma: float
    profit_rate: float

    @property
    def ord_units(self) -> int:
        return unit_capacity(self.orc, self.pt)

    @property
    def ot_units(self) -> int:
        return unit_capacity(self.ovc, self.pt)

    @property
    def send_cap(self) -> int:
        """Largest single send: a vehicle load that also fits the store."""
        return min(self.vcap, self.incap)


_ITEM_FIELDS = ("cor", "cov", "orc", "ovc", "pt", "h", "h_prime", "sc", "ss", "vcap", "incap")


@dataclass(eq=False)
class SupplierParams:
    cor: np.ndarray
    cov: np.ndarray
    orc: np.ndarray
    ovc: np.ndarray
    pt: np.ndarray
    h: np.ndarray
    h_prime: np.ndarray
    sc: np.ndarray
    ss: np.ndarray
    vcap: np.ndarray
    incap: np.ndarray
    vehicles: int
    alpha: float
    beta: float
    gamma: float
    profit_rate: float
    _lanes: dict = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self):
        for name in _ITEM_FIELDS:
            dtype = np.int64 if name in ("ss", "vcap", "incap") else float
            setattr(self, name, np.atleast_1d(np.asarray(getattr(self, name), dtype=dtype)))
        self.vehicles = int(self.vehicles)

    @property
    def item_count(self) -> int:
        return len(self.cor)

    def item(self, j: int) -> SupplierItem:
        lane = self._lanes.get(j)
        if lane is None:
            lane = SupplierItem(
                cor=float(self.cor[j]),
                cov=float(self.cov[j]),
                orc=float(self.orc[j]),
                ovc=float(self.ovc[j]),
                pt=float(self.pt[j]),
                h=float(self.h[j]),
                h_prime=float(self.h_prime[j]),
                sc=float(self.sc[j]),
                ss=int(self.ss[j]),
                vcap=int(self.vcap[j]),
                incap=int(self.incap[j]),
                vehicles=self.vehicles,
                alpha=float(self.alpha),
                beta=float(self.beta),
                gamma=float(self.gamma),
                profit_rate=float(self.profit_rate),
            )
            self._lanes[j] = lane
        return lane

    def with_gamma(self, gamma: float) -> "SupplierParams":
        kwargs = {name: getattr(self, name) for name in _ITEM_FIELDS}
        return SupplierParams(
            **kwargs,
            vehicles=self.vehicles,
            alpha=self.alpha,
            beta=self.beta,
            gamma=gamma,
            profit_rate=self.profit_rate,
        )


@dataclass(eq=False)
class ProcurementInstance:
    buyer: BuyerParams
    suppliers: tuple[SupplierParams, ...]
    horizon: int
    name: str = "instance"
    seed: int | None = None

    def __post_init__(self):
        self.suppliers = tuple(self.suppliers)
        self.horizon = int(self.horizon)

    @property
    def supplier_count(self) -> int:
        return len(self.suppliers)

    @property
    def item_count(self) -> int:
        return len(self.buyer.demand)


@dataclass(eq=False)
class AllocationMatrix:
    q: np.ndarray  # (n, m) int

    def __post_init__(self):
        self.q = np.atleast_2d(np.asarray(self.q, dtype=np.int64))

    @property
    def active(self) -> np.ndarray:
        return self.q > 0


@dataclass(eq=False)
class SupplierPlan:
    """One supplier's lower-level solution for one item.

    Period arrays are indexed ``0..T-1`` for periods ``1..T``; ``inventory``
    has ``T + 1`` entries with ``inventory[0]`` the opening stock.
    """

    prod_ord: np.ndarray
    prod_ot: np.ndarray
    sends: np.ndarray  # (T, V)
    vehicle_used: np.ndarray  # (T, V) bool
    setup: np.ndarray  # (T,) bool
    inventory: np.ndarray  # (T + 1,)
    delay_penalty: np.ndarray  # (T,)
    total_cost: float
    price: float = float("nan")

    @property
    def horizon(self) -> int:
        return len(self.prod_ord)

    @property
    def shipped(self) -> np.ndarray:
        """Units delivered in each period."""
        return self.sends.sum(axis=1)

    @property
    def quantity(self) -> int:
        return int(self.sends.sum())

    def same_as(self, other: "SupplierPlan") -> bool:
        arrays = ("prod_ord", "prod_ot", "sends", "vehicle_used", "setup", "inventory", "delay_penalty")
        return all(np.array_equal(getattr(self, a), getattr(other, a)) for a in arrays) and (
            self.total_cost == other.total_cost
        )


@dataclass(frozen=True)
class CostBreakdown:
    production_ord: float = 0.0
    production_ot: float = 0.0
    holding: float = 0.0
    holding_interval: float = 0.0
    delivery_fixed: float = 0.0
    delivery_var: float = 0.0
    setup: float = 0.0
    delay: float = 0.0

    @property
    def total(self) -> float:
        return (
            self.production_ord
            + self.production_ot
            + self.holding
            + self.holding_interval
            + self.delivery_fixed
            + self.delivery_var
            + self.setup
            + self.delay
        )


def validate_instance(inst: ProcurementInstance) -> list[str]:
    """Return every violated data invariant; an empty list means usable."""
    out: list[str] = []
    b = inst.buyer
    n, m = inst.supplier_count, inst.item_count
    if n < 1 or m < 1:
        return ["instance needs at least one supplier and one item"]
    if inst.horizon < 1:
        out.append(f"horizon must be >= 1, got {inst.horizon}")
    if b.lt_lower < 0 or b.lt_upper < 0:
        out.append("due window must be non-negative")
    if b.lt_lower > b.lt_upper:
        out.append(f"due window inverted: lt_lower={b.lt_lower} > lt_upper={b.lt_upper}")
    if b.delay_factor < 0:
        out.append("buyer delay factor must be non-negative")
    w1, w2 = b.weights
    if w1 < 0 or w2 < 0 or abs(w1 + w2 - 1.0) > 1e-9:
        out.append(f"weights must be non-negative and sum to 1, got ({w1}, {w2})")
    if np.any(b.demand < 0):
        out.append("demand must be non-negative")
    shapes_ok = True
    for name in ("q_min", "q_max", "ordering_cost"):
        if getattr(b, name).shape != (n, m):
            out.append(f"{name} has shape {getattr(b, name).shape}, expected {(n, m)}")
            shapes_ok = False
    if shapes_ok:
        if np.any(b.q_min < 0):
            out.append("q_min must be non-negative")
        for i, j in zip(*np.nonzero(b.q_min > b.q_max)):
            out.append(f"allocation bounds inverted for supplier {i}, item {j}")
        cover = b.q_max.sum(axis=0)
        for j in range(m):
            if cover[j] < b.demand[j]:
                out.append(f"demand uncoverable for item {j}: sum of q_max {cover[j]} < demand {b.demand[j]}")
        if np.any(b.ordering_cost < 0):
            out.append("ordering cost must be non-negative")
    for i, s in enumerate(inst.suppliers):
        tag = f"supplier {i}"
        for name in _ITEM_FIELDS:
            arr = getattr(s, name)
            if arr.shape != (m,):
                out.append(f"{tag}: {name} has {arr.shape[0]} entries, expected {m}")
            elif np.any(arr < 0):
                out.append(f"{tag}: {name} must be non-negative")
        if s.pt.shape == (m,) and np.any(s.pt <= 0):
            out.append(f"{tag}: processing time must be positive")
        if s.vcap.shape == (m,) and np.any(s.vcap < 1):
            out.append(f"{tag}: vehicle capacity must be a positive integer")
        if s.incap.shape == (m,) and np.any(s.incap < 1):
            out.append(f"{tag}: store capacity must be a positive integer")
        if s.vehicles < 1:
            out.append(f"{tag}: vehicle count must be positive")
        for name in ("alpha", "beta", "gamma", "profit_rate"):
            if getattr(s, name) < 0:
                out.append(f"{tag}: {name} must be non-negative")
        if s.ss.shape == (m,) and s.incap.shape == (m,) and np.any(s.ss > s.incap):
            out.append(f"{tag}: safety stock exceeds store capacity")
    return out


def estimate_horizon(buyer: BuyerParams, suppliers) -> int:
    """Number of periods needed by the slowest allocation bound.

    For every pair with a positive ``q_max`` the periods are the larger of the
    ordinary-time production time and the number of full vehicle rounds.
    """
    periods = 1
    for i, s in enumerate(suppliers):
        for j in range(len(buyer.demand)):
            q = int(buyer.q_max[i, j])
            if q <= 0:
                continue
            load = s.vehicles * min(int(s.vcap[j]), int(s.incap[j]))
            if s.orc[j] <= 0 or load <= 0:
                raise InstanceError(f"unbounded horizon: supplier {i} has no capacity for item {j}")
            need = max(q * s.pt[j] / s.orc[j], q / load)
            periods = max(periods, math.ceil(need - _FLOOR_EPS))
    return int(periods)


def supplier_delay_penalty(sends_in_period: int, t: int, lt_lower: int, gamma: float) -> float:
    """Supplier's lateness charge for one period's deliveries."""
    return max(0.0, gamma * (t - lt_lower) * sends_in_period)


def buyer_shortage_cost(sends_in_period: int, t: int, lt_upper: int, lam: float) -> float:
    """Buyer's shortage charge for units arriving after the late due date."""
    return max(0.0, lam * (t - lt_upper) * sends_in_period)


def period_cost(
    lane: SupplierItem,
    yr: int,
    yn: int,
    sends,
    inv_prev: int,
    inv_end: int,
    lodc: float,
) -> float:
    """Cost of a single period, same terms as :func:`supplier_total_cost`."""
    shipped = 0
    sq = 0
    used = 0
    for s in sends:
        if s:
            shipped += s
            sq += s * s
            used += 1
    return (
        lane.cor * yr
        + lane.cov * yn
        + 0.5 * lane.h * lane.pt * (sq + inv_end * inv_end - inv_prev * inv_prev)
        + lane.h_prime * inv_end
        + lane.alpha * used
        + lane.beta * shipped
        + lodc
        + (lane.sc if yr + yn > 0 else 0.0)
    )


def supplier_total_cost(plan: SupplierPlan, params: SupplierParams | SupplierItem, item: int = 0) -> CostBreakdown:
    """Evaluate the supplier cost of one item's plan term by term.

    The in-period holding term is kept exactly as the model states it,
    ``H*PT/2 * (sum send^2 + I_t^2 - I_{t-1}^2)``; the between-period term
    charges ``H'`` on the end-of-period stock.
    """
    lane = params if isinstance(params, SupplierItem) else params.item(item)
    T = plan.horizon
    if plan.inventory.shape != (T + 1,) or plan.sends.shape[0] != T or plan.setup.shape != (T,):
        raise ValueError("plan arrays have inconsistent horizons")
    yr = plan.prod_ord.astype(float)
    yn = plan.prod_ot.astype(float)
    sends = plan.sends.astype(float)
    inv = plan.inventory.astype(float)
    hpt = 0.5 * lane.h * lane.pt
    holding = hpt * float(np.sum((sends**2).sum(axis=1) + inv[1:] ** 2 - inv[:-1] ** 2))
    return CostBreakdown(
        production_ord=lane.cor * float(yr.sum()),
        production_ot=lane.cov * float(yn.sum()),
        holding=holding,
        holding_interval=lane.h_prime * float(inv[1:].sum()),
        delivery_fixed=lane.alpha * float(plan.vehicle_used.sum()),
        delivery_var=lane.beta * float(sends.sum()),
        setup=lane.sc * float(plan.setup.sum()),
        delay=float(np.sum(plan.delay_penalty)),
    )


def plan_from_periods(lane: SupplierItem, q: int, horizon: int, periods) -> SupplierPlan:
    """Assemble a priced plan from per-period ``(yr, yn, sends, inv_end, lodc)`` rows.

    Rows cover periods ``1..k``; periods after ``k`` are idle with the last
    stock carried forward.
    """
    T, V = horizon, lane.vehicles
    yr = np.zeros(T, dtype=np.int64)
    yn = np.zeros(T, dtype=np.int64)
    sends = np.zeros((T, V), dtype=np.int64)
    inv = np.full(T + 1, lane.ss, dtype=np.int64)
    lodc = np.zeros(T, dtype=float)
    for t, (a, b, s, end, pen) in enumerate(periods):
        yr[t], yn[t] = a, b
        sends[t] = s
        inv[t + 1 :] = end
        lodc[t] = pen
    plan = SupplierPlan(
        prod_ord=yr,
        prod_ot=yn,
        sends=sends,
        vehicle_used=sends > 0,
        setup=(yr + yn) > 0,
        inventory=inv,
        delay_penalty=lodc,
        total_cost=0.0,
    )
    plan.total_cost = supplier_total_cost(plan, lane).total
    if q > 0:
        plan.price = bid_price(plan.total_cost, float(lodc.sum()), q, lane.profit_rate)
    return plan


def bid_price(total_cost: float, delay_sum: float, q: int, g: float) -> float:
    """Unit price a supplier quotes: cost net of its own delay penalties plus margin."""
    if q <= 0:
        raise ValueError("no allocation, price undefined")
    return (1.0 + g) / q * (total_cost - delay_sum)


def objective_components(
    alloc: AllocationMatrix,
    plans: Mapping[tuple[int, int], SupplierPlan],
    buyer: BuyerParams,
) -> tuple[float, float]:
    """Unweighted ``(procurement, shortage)`` parts of the buyer objective."""
    procurement = 0.0
    shortage = 0.0
    for i, j in zip(*np.nonzero(alloc.q > 0)):
        i, j = int(i), int(j)
        q = int(alloc.q[i, j])
        plan = plans.get((i, j))
        if plan is None or plan.quantity != q:
            raise PlanMismatch(f"plan/allocation mismatch for supplier {i}, item {j}")
        procurement += plan.price * q + buyer.ordering_cost[i, j]
        for t, shipped in enumerate(plan.shipped, start=1):
            shortage += buyer_shortage_cost(int(shipped), t, buyer.lt_upper, buyer.delay_factor)
    return procurement, shortage


def buyer_objective(
    alloc: AllocationMatrix,
    plans: Mapping[tuple[int, int], SupplierPlan],
    buyer: BuyerParams,
) -> float:
    w1, w2 = buyer.weights
    procurement, shortage = objective_components(alloc, plans, buyer)
    return w1 * procurement + w2 * shortage


def allocation_violations(alloc: AllocationMatrix, buyer: BuyerParams) -> list[str]:
    q = alloc.q
    out = []
    if q.shape != buyer.q_min.shape:
        return [f"allocation shape {q.shape} != {buyer.q_min.shape}"]
    if np.any(q < 0):
        out.append("negative allocation")
    act = q > 0
    if np.any(act & ((q < buyer.q_min) | (q > buyer.q_max))):
        out.append("allocation outside [q_min, q_max]")
    sums = q.sum(axis=0)
    for j in np.nonzero(sums != buyer.demand)[0]:
        out.append(f"item {j}: allocated {sums[j]} != demand {buyer.demand[j]}")
    return out


def check_plan_feasible(plan: SupplierPlan, params: SupplierParams | SupplierItem, item: int, q: int, T: int) -> list[str]:
    """List every lower-level constraint the plan breaks (empty when feasible)."""
    lane = params if isinstance(params, SupplierItem) else params.item(item)
    out: list[str] = []
    if plan.horizon != T or plan.inventory.shape != (T + 1,) or plan.sends.shape[0] != T:
        return [f"plan horizon {plan.horizon} does not match T={T}"]
    if plan.sends.shape[1] != lane.vehicles or plan.vehicle_used.shape != plan.sends.shape:
        out.append(f"vehicle dimension {plan.sends.shape[1]} != fleet size {lane.vehicles}")
    yr, yn = plan.prod_ord, plan.prod_ot
    sends, inv = plan.sends, plan.inventory
    for name, arr in (("ordinary production", yr), ("overtime production", yn), ("sends", sends), ("inventory", inv)):
        if np.any(arr < 0):
            out.append(f"negative {name}")
    if np.any(yr * lane.pt > lane.orc + _FLOOR_EPS):
        out.append("ordinary capacity exceeded")
    if np.any(yn * lane.pt > lane.ovc + _FLOOR_EPS):
        out.append("overtime capacity exceeded")
    prod = yr + yn
    if np.any((prod > 0) & ~plan.setup.astype(bool)):
        out.append("production without setup")
    if np.any(prod > q):
        out.append("period production exceeds the order (big-M)")
    if int(prod.sum()) != q:
        out.append(f"production total {int(prod.sum())} != order {q}")
    if int(inv[0]) != lane.ss:
        out.append(f"opening inventory {int(inv[0])} != safety stock {lane.ss}")
    balance = inv[:-1] + prod - sends.sum(axis=1)
    if np.any(balance != inv[1:]):
        out.append("inventory balance broken")
    if np.any(inv[1:] > lane.incap):
        out.append("storage capacity exceeded")
    total_sent = int(sends.sum())
    if total_sent < q:
        out.append(f"delivery shortfall: sent {total_sent} of {q}")
    elif total_sent > q:
        out.append(f"over-delivery: sent {total_sent} of {q}")
    used = plan.vehicle_used.astype(bool)
    if np.any(sends > used * lane.vcap):
        out.append("vehicle capacity exceeded or send on an unused vehicle")
    if np.any(sends > lane.incap):
        out.append("send exceeds store capacity")
    if np.any(used.sum(axis=1) > lane.vehicles):
        out.append("more vehicles than available")
    if np.any(np.asarray(plan.delay_penalty) < 0):
        out.append("negative delay penalty")
    return out
