"""Per-period delivery rule shared by every lower-level solver.

Given the stock carried in, the units produced this period and the
undelivered remainder, the rule fixes how many vehicles leave and how much
each carries. It balances the in-period holding cost of a load against the
fixed and variable cost of a trip, then pushes leftover stock onto the
vehicles already in use when holding it over the interval would cost more.

The rule only depends on total production ``yr + yn``, never on its split
between ordinary time and overtime.
"""

from __future__ import annotations

import math
from functools import lru_cache

from .model import SupplierItem

_ROOT_TOL = 1e-12


def _balance_root(lane: SupplierItem) -> float:
    hpt = lane.h * lane.pt
    if hpt <= 0:
        return math.inf
    return (lane.beta + math.sqrt(lane.beta**2 + 2.0 * lane.alpha * hpt)) / hpt


@lru_cache(maxsize=4096)
def _load_ceiling(lane: SupplierItem) -> int:
    """Per-vehicle load before the remainder cap: store, vehicle and cost balance."""
    root = _balance_root(lane)
    cap = min(lane.incap, lane.vcap)
    if root < math.inf:
        cap = min(cap, math.floor(root + 1e-9))
    return cap


def base_delivery_quantity(lane: SupplierItem, remaining: int | None = None) -> int:
    """Per-vehicle load where holding a load costs as much as shipping it.

    Solves ``H*PT/2 * s^2 = alpha + beta*s`` for its positive root and caps
    the result by the store, the vehicle and the undelivered remainder.
    Falls back to the capacity caps when holding is free (``H*PT == 0``).
    """
    cap = _load_ceiling(lane)
    if remaining is not None:
        cap = min(cap, remaining)
    return max(1, int(cap))


def delivery_count(production: int, aq: int, vehicles: int) -> int:
    """Vehicles needed to move ``production`` units at ``aq`` per vehicle."""
    if production <= 0:
        return 0
    return min(vehicles, -(-production // aq))


def augmentation_root(nv: int, aq: int, leftover: int, inv_prev: int, lane: SupplierItem) -> float:
    """Smallest non-negative per-vehicle augmentation balancing holding and trip cost.

    The left side adds the in-period holding of ``nv`` augmented loads, the
    holding of what stays behind (in-period and between periods) and removes
    the stock carried in; the right side is the trip cost of the augmented
    loads. Returns 0.0 when no non-negative root exists.
    """
    if nv <= 0:
        return 0.0
    k = 0.5 * lane.h * lane.pt
    hp = lane.h_prime
    a2 = k * nv * (1 + nv)
    a1 = nv * (2.0 * k * aq - 2.0 * k * leftover - hp - lane.beta)
    a0 = (
        nv * k * aq * aq
        + k * leftover * leftover
        + hp * leftover
        - k * inv_prev * inv_prev
        - lane.alpha * nv
        - lane.beta * nv * aq
    )
    roots: list[float] = []
    if abs(a2) <= _ROOT_TOL:
        if abs(a1) > _ROOT_TOL:
            roots.append(-a0 / a1)
    else:
        disc = a1 * a1 - 4.0 * a2 * a0
        if disc >= -_ROOT_TOL:
            sq = math.sqrt(max(disc, 0.0))
            roots.extend(((-a1 - sq) / (2.0 * a2), (-a1 + sq) / (2.0 * a2)))
    feasible = [r for r in roots if r >= -_ROOT_TOL]
    return max(0.0, min(feasible)) if feasible else 0.0


def split_evenly(total: int, nv: int, vehicles: int) -> tuple[int, ...]:
    """Spread ``total`` over ``nv`` vehicles, remainder one unit at a time from vehicle 0."""
    if total <= 0 or nv <= 0:
        return (0,) * vehicles
    base, rem = divmod(total, nv)
    return tuple(base + 1 if v < rem else base for v in range(nv)) + (0,) * (vehicles - nv)


def square_sum(total: int, used: int) -> int:
    """Sum of squared loads when ``total`` is spread evenly over ``used`` vehicles."""
    if used <= 0:
        return 0
    base, rem = divmod(total, used)
    return rem * (base + 1) ** 2 + (used - rem) * base * base


def _augmented_totals(inv_prev: int, production: int, remaining: int, lane: SupplierItem) -> tuple[int, int]:
    available = inv_prev + production
    shippable = min(available, remaining)
    if shippable <= 0:
        return 0, 0
    aq = base_delivery_quantity(lane, remaining)
    # with nothing produced the trucks are sized on what can leave the store
    nv = delivery_count(production if production > 0 else shippable, aq, lane.vehicles)
    nv = min(nv, -(-shippable // aq))
    base = min(nv * aq, shippable)
    x = augmentation_root(nv, aq, available - base, inv_prev, lane)
    extra = min(nv * math.floor(x + 1e-9), nv * (lane.send_cap - aq), shippable - base)
    return base + max(0, extra), nv


def augmented_delivery(inv_prev: int, production: int, remaining: int, lane: SupplierItem) -> tuple[tuple[int, ...], int]:
    """Loads for one period before any horizon-level correction.

    Returns ``(sends, end_inventory)`` with one entry per vehicle. Stock the
    augmented loads cannot take is held to the next period.
    """
    total, nv = _augmented_totals(inv_prev, production, remaining, lane)
    return split_evenly(total, nv, lane.vehicles), inv_prev + production - total


def delivery_totals(
    inv_prev: int,
    production: int,
    remaining: int,
    period: int,
    horizon: int,
    lane: SupplierItem,
) -> tuple[int, int] | None:
    """``(units shipped, vehicles loaded)`` chosen by :func:`plan_deliveries`, or ``None``."""
    cap = lane.send_cap
    fleet = lane.vehicles * cap
    available = inv_prev + production
    hi = min(available, remaining, fleet)
    lo = max(0, available - lane.incap, remaining - (horizon - period) * fleet)
    if lo > hi:
        return None
    total, nv = _augmented_totals(inv_prev, production, remaining, lane)
    if total >= lo:
        return total, min(nv, total)
    return lo, max(min(nv, total), -(-lo // cap))


def plan_deliveries(
    inv_prev: int,
    production: int,
    remaining: int,
    period: int,
    horizon: int,
    lane: SupplierItem,
) -> tuple[tuple[int, ...], int] | None:
    """Loads for ``period`` that keep the rest of the horizon feasible.

    Starts from :func:`augmented_delivery` and raises the shipped total when
    the store would overflow or when the remaining periods could not carry
    the rest of the order; extra vehicles are added as needed. Returns
    ``None`` when no shipment satisfies both limits.
    """
    d = delivery_totals(inv_prev, production, remaining, period, horizon, lane)
    if d is None:
        return None
    total, used = d
    return split_evenly(total, used, lane.vehicles), inv_prev + production - total
