"""Bi-level order allocation: a buyer-side particle swarm over supplier plans found by A* search."""

from .astar import OpenList, PlannerState, SearchNode, SearchStats, best_first_search, heuristic_cost, solve_subproblem
from .baselines import (
    SAConfig,
    compare_suite,
    deviation,
    greedy_solve_subproblem,
    make_solver,
    sa_solve_subproblem,
)
from .instances import generate_instance, read_instance, write_instance
from .model import (
    AllocationMatrix,
    BuyerParams,
    CostBreakdown,
    InfeasibleSubproblem,
    InstanceError,
    ProcurementInstance,
    SupplierItem,
    SupplierParams,
    SupplierPlan,
    bid_price,
    buyer_objective,
    check_plan_feasible,
    estimate_horizon,
    supplier_total_cost,
    validate_instance,
)
from .oracle import BudgetExceeded, EnumerationBudget, brute_force_bilevel, brute_force_subproblem, completion_cost_table
from .pso import SolveReport, SwarmConfig, repair_demand, run

__version__ = "0.1.0"
