from __future__ import annotations

import numpy as np
import pytest

from bilevel_procurement.model import BuyerParams, ProcurementInstance, SupplierItem, SupplierParams

LANE_DEFAULTS = dict(
    cor=10.0,
    cov=15.0,
    orc=2.0,
    ovc=1.0,
    pt=1.0,
    h=1.0,
    h_prime=0.5,
    sc=3.0,
    ss=0,
    vcap=5,
    incap=10,
    vehicles=2,
    alpha=5.0,
    beta=1.0,
    gamma=0.5,
    profit_rate=0.1,
)


def make_lane(**kw) -> SupplierItem:
    return SupplierItem(**{**LANE_DEFAULTS, **kw})


def supplier_from_lanes(*lanes: SupplierItem) -> SupplierParams:
    """Stack per-item lanes into one supplier; fleet and cost scalars come from the first lane."""
    first = lanes[0]
    cols = {name: [getattr(l, name) for l in lanes] for name in
            ("cor", "cov", "orc", "ovc", "pt", "h", "h_prime", "sc", "ss", "vcap", "incap")}
    return SupplierParams(
        **cols,
        vehicles=first.vehicles,
        alpha=first.alpha,
        beta=first.beta,
        gamma=first.gamma,
        profit_rate=first.profit_rate,
    )


def make_instance(demand, q_min, q_max, lanes_per_supplier, horizon=4, lt=(1, 2), lam=2.0, weights=(0.4, 0.6)):
    n = len(lanes_per_supplier)
    m = len(demand)
    buyer = BuyerParams(
        demand=demand,
        lt_lower=lt[0],
        lt_upper=lt[1],
        q_min=q_min,
        q_max=q_max,
        delay_factor=lam,
        ordering_cost=np.full((n, m), 1.0),
        weights=weights,
    )
    sups = tuple(supplier_from_lanes(*lanes) for lanes in lanes_per_supplier)
    return ProcurementInstance(buyer, sups, horizon, name="fixture")


@pytest.fixture
def lane():
    return make_lane()


@pytest.fixture
def two_supplier_instance():
    lanes = [[make_lane(cor=10.0)], [make_lane(cor=12.0, alpha=3.0)]]
    return make_instance([6], [[2], [2]], [[4], [4]], lanes, horizon=4)


# one line per acceptance criterion, printed at the end of the run
ACCEPTANCE: dict[str, tuple[bool, str]] = {}


def record(label: str, ok: bool, detail: str) -> bool:
    ACCEPTANCE[label] = (bool(ok), detail)
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[label]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {label}: {detail}")
