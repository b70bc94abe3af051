"""Instance files, the random generator and the benchmark suites.

Instance files are JSON with a fixed key set; anything else is rejected.
Generated instances draw demand from U[300, 1000] and processing times from
U[3, 5.5]; the other ranges are listed in ``GENERATOR_RANGES``.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import jsonschema
import numpy as np

from .model import (
    BuyerParams,
    InstanceError,
    ProcurementInstance,
    SupplierItem,
    SupplierParams,
    estimate_horizon,
)

GENERATOR_RANGES = {
    "demand": (300, 1000),
    "pt": (3.0, 5.5),
    "cor": (5.0, 15.0),
    "cov_markup": (1.2, 1.6),
    "orc": (200.0, 400.0),
    "ovc": (200.0, 400.0),
    "h": (0.5, 2.0),
    "h_prime_ratio": (0.5, 1.0),
    "sc": (50.0, 200.0),
    "ss": (0, 20),
    "vcap": (20, 60),
    "incap": (40, 120),
    "vehicles": (2, 5),
    "alpha": (20.0, 80.0),
    "beta": (0.5, 3.0),
    "gamma": (0.3, 0.9),
    "profit_rate": (0.05, 0.2),
    "ordering_cost": (10.0, 50.0),
    # q_max = D * U[...] / suppliers, q_min = q_max * U[...]
    "q_max_share": (1.2, 2.0),
    "q_min_ratio": (0.2, 0.5),
}

# (suppliers, items) of the small and large comparison suites
SMALL_SUITE_SHAPES = (
    (2, 1), (2, 2), (2, 3), (2, 5), (2, 7),
    (3, 1), (3, 2), (3, 3), (3, 5), (3, 7),
    (4, 1), (4, 2), (4, 3), (5, 1),
)
LARGE_SUITE_SHAPES = ((8, 30), (8, 50), (10, 50), (15, 70))

_NUM = {"type": "number", "minimum": 0}
_INT = {"type": "integer", "minimum": 0}
_NUM_ROW = {"type": "array", "items": _NUM, "minItems": 1}
_INT_ROW = {"type": "array", "items": _INT, "minItems": 1}

INSTANCE_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["meta", "buyer", "suppliers"],
    "properties": {
        "meta": {
            "type": "object",
            "additionalProperties": False,
            "required": ["name"],
            "properties": {"name": {"type": "string"}, "seed": {"type": ["integer", "null"]}},
        },
        "buyer": {
            "type": "object",
            "additionalProperties": False,
            "required": ["demand", "lt_lower", "lt_upper", "lambda", "weights", "q_min", "q_max", "ordering_cost"],
            "properties": {
                "demand": _INT_ROW,
                "lt_lower": _INT,
                "lt_upper": _INT,
                "lambda": _NUM,
                "weights": {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2},
                "q_min": {"type": "array", "items": _INT_ROW, "minItems": 1},
                "q_max": {"type": "array", "items": _INT_ROW, "minItems": 1},
                "ordering_cost": {"type": "array", "items": _NUM_ROW, "minItems": 1},
            },
        },
        "suppliers": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": [
                    "cor", "cov", "orc", "ovc", "pt", "h", "h_prime", "sc", "ss", "vcap", "incap",
                    "vehicles", "alpha", "beta", "gamma", "profit_rate",
                ],
                "properties": {
                    **{k: _NUM_ROW for k in ("cor", "cov", "orc", "ovc", "pt", "h", "h_prime", "sc")},
                    **{k: _INT_ROW for k in ("ss", "vcap", "incap")},
                    "vehicles": {"type": "integer", "minimum": 1},
                    "alpha": _NUM,
                    "beta": _NUM,
                    "gamma": _NUM,
                    "profit_rate": _NUM,
                },
            },
        },
        "horizon": {"type": "integer", "minimum": 1},
    },
}

_SUPPLIER_ARRAYS = ("cor", "cov", "orc", "ovc", "pt", "h", "h_prime", "sc", "ss", "vcap", "incap")
_SUPPLIER_SCALARS = ("vehicles", "alpha", "beta", "gamma", "profit_rate")


class InstanceFormatError(InstanceError):
    pass


def _plain(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, np.generic):
        return x.item()
    return x


def instance_to_dict(inst: ProcurementInstance) -> dict:
    b = inst.buyer
    return {
        "meta": {"name": inst.name, "seed": inst.seed},
        "buyer": {
            "demand": _plain(b.demand),
            "lt_lower": int(b.lt_lower),
            "lt_upper": int(b.lt_upper),
            "lambda": float(b.delay_factor),
            "weights": [float(w) for w in b.weights],
            "q_min": _plain(b.q_min),
            "q_max": _plain(b.q_max),
            "ordering_cost": _plain(b.ordering_cost),
        },
        "suppliers": [
            {
                **{k: _plain(getattr(s, k)) for k in _SUPPLIER_ARRAYS},
                **{k: _plain(getattr(s, k)) for k in _SUPPLIER_SCALARS},
            }
            for s in inst.suppliers
        ],
        "horizon": int(inst.horizon),
    }


def instance_from_dict(doc: dict) -> ProcurementInstance:
    """Build an instance from a parsed document; the horizon is estimated if absent."""
    try:
        jsonschema.validate(doc, INSTANCE_SCHEMA)
    except jsonschema.ValidationError as err:
        where = "/".join(str(p) for p in err.absolute_path) or "<root>"
        raise InstanceFormatError(f"instance invalid at {where}: {err.message}") from None
    bd = doc["buyer"]
    buyer = BuyerParams(
        demand=bd["demand"],
        lt_lower=bd["lt_lower"],
        lt_upper=bd["lt_upper"],
        q_min=bd["q_min"],
        q_max=bd["q_max"],
        delay_factor=bd["lambda"],
        ordering_cost=bd["ordering_cost"],
        weights=tuple(bd["weights"]),
    )
    suppliers = tuple(SupplierParams(**sd) for sd in doc["suppliers"])
    horizon = doc.get("horizon")
    if horizon is None:
        horizon = estimate_horizon(buyer, suppliers)
    meta = doc["meta"]
    return ProcurementInstance(buyer, suppliers, horizon, name=meta["name"], seed=meta.get("seed"))


def write_instance(inst: ProcurementInstance, path) -> None:
    text = json.dumps(instance_to_dict(inst), indent=2)
    Path(path).write_text(text + "\n", encoding="utf-8")


def read_instance(path) -> ProcurementInstance:
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        raise InstanceFormatError(f"{path}: malformed JSON at line {err.lineno}, column {err.colno}: {err.msg}") from None
    return instance_from_dict(doc)


def due_window(horizon: int) -> tuple[int, int]:
    """Due window used by generated instances: early date mid-horizon, late date a quarter later."""
    lo = math.ceil(horizon / 2)
    return lo, lo + math.ceil(horizon / 4)


def generate_instance(suppliers: int, items: int, seed: int, name: str | None = None) -> ProcurementInstance:
    """Random instance in the benchmark ranges; identical for identical arguments."""
    if suppliers < 1 or items < 1:
        raise ValueError("need at least one supplier and one item")
    R = GENERATOR_RANGES
    rng = np.random.default_rng(seed)
    n, m = suppliers, items

    def u(key, size=None):
        lo, hi = R[key]
        return rng.uniform(lo, hi, size)

    def ui(key, size=None):
        lo, hi = R[key]
        return rng.integers(lo, hi + 1, size)

    demand = ui("demand", m)
    q_max = np.ceil(demand[None, :] * u("q_max_share", (n, m)) / n).astype(np.int64)
    q_min = np.maximum(1, np.floor(q_max * u("q_min_ratio", (n, m)))).astype(np.int64)
    sup = []
    for _ in range(n):
        cor = u("cor", m)
        h = u("h", m)
        sup.append(
            SupplierParams(
                cor=cor,
                cov=cor * u("cov_markup", m),
                orc=u("orc", m),
                ovc=u("ovc", m),
                pt=u("pt", m),
                h=h,
                h_prime=h * u("h_prime_ratio", m),
                sc=u("sc", m),
                ss=ui("ss", m),
                vcap=ui("vcap", m),
                incap=ui("incap", m),
                vehicles=int(ui("vehicles")),
                alpha=float(u("alpha")),
                beta=float(u("beta")),
                gamma=float(u("gamma")),
                profit_rate=float(u("profit_rate")),
            )
        )
    gammas = [s.gamma for s in sup]
    buyer = BuyerParams(
        demand=demand,
        lt_lower=0,
        lt_upper=0,
        q_min=q_min,
        q_max=q_max,
        delay_factor=2.0 * float(np.mean(gammas)),
        ordering_cost=u("ordering_cost", (n, m)),
    )
    horizon = estimate_horizon(buyer, sup)
    buyer.lt_lower, buyer.lt_upper = due_window(horizon)
    return ProcurementInstance(buyer, sup, horizon, name=name or f"gen-{n}x{m}-{seed}", seed=int(seed))


def micro_lane(rng: np.random.Generator) -> tuple[SupplierItem, int, int, int]:
    """Random small subproblem ``(lane, q, horizon, lt_lower)``.

    Horizon at most 3, unit capacities at most 5, at most 2 vehicles, order at
    most 8 units and overtime never cheaper than ordinary time.
    """
    T = int(rng.integers(1, 4))
    pt = float(rng.choice([1.0, 1.5, 2.0]))
    ord_units = int(rng.integers(1, 6))
    ot_units = int(rng.integers(0, 6))
    ss = int(rng.integers(0, 3))
    vcap = int(rng.integers(1, 6))
    incap = int(rng.integers(max(ss, 1), 6))
    vehicles = int(rng.integers(1, 3))
    cor = float(rng.uniform(1.0, 10.0))
    h = float(rng.uniform(0.1, 2.0))
    lane = SupplierItem(
        cor=cor,
        cov=cor * float(rng.uniform(1.0, 1.6)),
        # a fractional slack below one unit keeps the floor at the drawn count
        orc=pt * (ord_units + float(rng.uniform(0.0, 0.9))),
        ovc=pt * (ot_units + float(rng.uniform(0.0, 0.9))),
        pt=pt,
        h=h,
        h_prime=h * float(rng.uniform(0.0, 1.0)),
        sc=float(rng.uniform(0.0, 20.0)),
        ss=ss,
        vcap=vcap,
        incap=incap,
        vehicles=vehicles,
        alpha=float(rng.uniform(0.0, 10.0)),
        beta=float(rng.uniform(0.0, 3.0)),
        gamma=float(rng.choice([0.0, rng.uniform(0.1, 2.0)])),
        profit_rate=float(rng.uniform(0.0, 0.2)),
    )
    top = min(8, T * (lane.ord_units + lane.ot_units), T * vehicles * lane.send_cap)
    q = int(rng.integers(1, top + 1))
    lt_lower = int(rng.integers(0, T + 1))
    return lane, q, T, lt_lower


def micro_suite(count: int = 200, seed: int = 0) -> list[tuple[SupplierItem, int, int, int]]:
    rng = np.random.default_rng(seed)
    return [micro_lane(rng) for _ in range(count)]


def tiny_bilevel_instance(seed: int, max_allocations: int = 10) -> ProcurementInstance:
    """Two suppliers, one item, a handful of feasible splits and small subproblems."""
    from .oracle import feasible_columns

    rng = np.random.default_rng(seed)
    while True:
        D = int(rng.integers(4, 11))
        q_max = rng.integers(max(2, D // 2), D + 1, 2)
        if q_max.sum() < D:
            continue
        q_min = np.array([int(rng.integers(1, int(hi) + 1)) for hi in q_max])
        count = len(feasible_columns(D, q_min, q_max))
        if 2 <= count <= max_allocations:
            break
    sup = []
    for _ in range(2):
        pt = float(rng.choice([1.0, 2.0]))
        cor = rng.uniform(1.0, 10.0)
        h = rng.uniform(0.1, 1.0)
        sup.append(
            SupplierParams(
                cor=[cor],
                cov=[cor * rng.uniform(1.0, 1.6)],
                orc=[pt * int(rng.integers(2, 5))],
                ovc=[pt * int(rng.integers(0, 4))],
                pt=[pt],
                h=[h],
                h_prime=[h * rng.uniform(0.0, 1.0)],
                sc=[rng.uniform(0.0, 20.0)],
                ss=[int(rng.integers(0, 3))],
                vcap=[int(rng.integers(2, 6))],
                incap=[int(rng.integers(3, 8))],
                vehicles=int(rng.integers(1, 3)),
                alpha=float(rng.uniform(0.0, 10.0)),
                beta=float(rng.uniform(0.0, 2.0)),
                gamma=float(rng.uniform(0.0, 1.5)),
                profit_rate=float(rng.uniform(0.0, 0.2)),
            )
        )
    buyer = BuyerParams(
        demand=[D],
        lt_lower=0,
        lt_upper=0,
        q_min=q_min[:, None],
        q_max=q_max[:, None],
        delay_factor=float(rng.uniform(0.5, 3.0)),
        ordering_cost=rng.uniform(0.0, 10.0, (2, 1)),
    )
    horizon = min(4, estimate_horizon(buyer, sup) + 1)
    buyer.lt_lower, buyer.lt_upper = due_window(horizon)
    return ProcurementInstance(buyer, sup, horizon, name=f"tiny-{seed}", seed=int(seed))


def small_suite(seed: int = 0) -> list[ProcurementInstance]:
    return [
        generate_instance(n, m, seed + k, name=f"small-{k + 1:02d}-{n}x{m}")
        for k, (n, m) in enumerate(SMALL_SUITE_SHAPES)
    ]


def large_suite(seed: int = 0) -> list[ProcurementInstance]:
    return [
        generate_instance(n, m, seed + 100 + k, name=f"large-{k + 1}-{n}x{m}")
        for k, (n, m) in enumerate(LARGE_SUITE_SHAPES)
    ]
