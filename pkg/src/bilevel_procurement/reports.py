"""CSV reports and the weight/delay-factor sensitivity sweep.

Every numeric field is written with six decimals and rows end in a bare
``\\n``. The solve report leaves out wall time so that re-running a seeded
solve reproduces the file byte for byte.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .baselines import ComparisonRow
from .model import ProcurementInstance
from .pso import LowerSolver, SolveReport, SwarmConfig, run

SOLVE_HEADER = ("record", "iteration", "supplier", "item", "quantity", "price", "value")
SWEEP_HEADER = ("w1", "gamma", "objective", "procurement_component", "delay_component")


def fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.6f}"


def _render(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow(["" if v is None else v if isinstance(v, str) else fmt(v) for v in row])
    return buf.getvalue()


def _emit(text: str, out) -> None:
    if out is None or out == "-":
        import sys

        sys.stdout.write(text)
    elif hasattr(out, "write"):
        out.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def solve_rows(report: SolveReport):
    for it, value in enumerate(report.trace):
        yield ("trace", it, None, None, None, None, value)
    if report.alloc is not None:
        q = report.alloc.q
        for i, j in zip(*np.nonzero(q)):
            i, j = int(i), int(j)
            plan = report.plans.get((i, j))
            price = plan.price if plan is not None else math.nan
            yield ("allocation", None, i, j, int(q[i, j]), price, None)
    yield ("procurement", None, None, None, None, None, report.procurement)
    yield ("shortage", None, None, None, None, None, report.shortage)
    yield ("objective", None, None, None, None, None, report.objective)


def write_solve_report(report: SolveReport, out=None) -> str:
    """gbest trace, final allocation with unit prices and the objective parts."""
    text = _render(SOLVE_HEADER, solve_rows(report))
    _emit(text, out)
    return text


def write_compare_report(rows: list[ComparisonRow], out=None) -> str:
    algs = list(rows[0].deviation) if rows else []
    header = ["problem", "suppliers", "items", "repetitions"]
    for a in algs:
        header += [f"{a}_deviation", f"{a}_runtime"]
    body = []
    for r in rows:
        line = [r.problem, r.supplier_count, r.item_count, r.repetitions]
        for a in algs:
            line += [r.deviation[a], r.runtime[a]]
        body.append(line)
    text = _render(header, body)
    _emit(text, out)
    return text


def parse_grid(spec: str) -> list[float]:
    """Inclusive grid from ``start:stop:step``; a single number is a one-point grid."""
    parts = spec.split(":")
    try:
        nums = [float(p) for p in parts]
    except ValueError:
        raise ValueError(f"bad grid {spec!r}; expected start:stop:step") from None
    if len(nums) == 1:
        return [nums[0]]
    if len(nums) != 3:
        raise ValueError(f"bad grid {spec!r}; expected start:stop:step")
    start, stop, step = nums
    if step <= 0 or stop < start:
        raise ValueError(f"bad grid {spec!r}; need step > 0 and stop >= start")
    count = math.floor((stop - start) / step + 1e-9) + 1
    return [round(start + k * step, 10) for k in range(count)]


@dataclass
class SweepRow:
    w1: float
    gamma: float
    objective: float
    procurement: float
    delay: float


def with_weights_and_gamma(inst: ProcurementInstance, w1: float, gamma: float | None) -> ProcurementInstance:
    buyer = replace(inst.buyer, weights=(w1, 1.0 - w1))
    suppliers = inst.suppliers if gamma is None else tuple(s.with_gamma(gamma) for s in inst.suppliers)
    return ProcurementInstance(buyer, suppliers, inst.horizon, name=inst.name, seed=inst.seed)


def run_sweep(
    inst: ProcurementInstance,
    w1_values,
    gamma_values,
    cfg: SwarmConfig,
    lower_solver: LowerSolver,
) -> list[SweepRow]:
    """One swarm run per ``(w1, gamma)`` point, with every supplier's delay factor set to ``gamma``."""
    rows = []
    for w1 in w1_values:
        for gamma in gamma_values:
            rep = run(with_weights_and_gamma(inst, w1, gamma), cfg, lower_solver)
            rows.append(SweepRow(w1, gamma, rep.objective, rep.procurement, rep.shortage))
    return rows


def write_sweep_report(rows: list[SweepRow], out=None) -> str:
    text = _render(SWEEP_HEADER, ((r.w1, r.gamma, r.objective, r.procurement, r.delay) for r in rows))
    _emit(text, out)
    return text


def read_csv(path) -> list[dict]:
    with open(Path(path), encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))
