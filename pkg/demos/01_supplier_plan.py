"""One supplier, one item: how the lower-level planners compare.

Builds a single supplier/item pair, plans a 14-unit order with A*, greedy
search and simulated annealing, prints the A* plan period by period, then
checks A* against the enumeration oracle on a small copy of the problem.

    python demos/01_supplier_plan.py
"""

from bilevel_procurement import SupplierItem
from bilevel_procurement.astar import SearchStats, solve_subproblem
from bilevel_procurement.baselines import SAConfig, greedy_solve_subproblem, sa_solve_subproblem
from bilevel_procurement.model import check_plan_feasible, supplier_total_cost
from bilevel_procurement.oracle import brute_force_subproblem

lane = SupplierItem(
    cor=10.0, cov=16.0,          # unit cost in ordinary time and overtime
    orc=8.0, ovc=4.0, pt=2.0,    # 4 ordinary and 2 overtime units per period
    h=1.0, h_prime=0.5, sc=6.0,  # holding rates and setup charge
    ss=1, vcap=3, incap=6, vehicles=2,
    alpha=4.0, beta=1.0, gamma=2.0, profit_rate=0.1,
)
Q, T, LT = 14, 5, 2

print(f"order of {Q} units over {T} periods, lateness charged after period {LT}\n")

stats = SearchStats()
exact = solve_subproblem(lane, Q, T, LT, beam=None, stats=stats)
print(f"A* (unbounded open list): cost {exact.total_cost:.2f}, "
      f"{stats.expanded} nodes expanded, {stats.generated} generated")
print("period  ordinary  overtime  sends        end stock")
for t in range(T):
    sends = " ".join(str(int(s)) for s in exact.sends[t])
    print(f"{t + 1:>6}  {exact.prod_ord[t]:>8}  {exact.prod_ot[t]:>8}  {sends:<11}  {exact.inventory[t + 1]:>9}")
print(f"bid price per unit: {exact.price:.3f}")
print("cost breakdown:", {k: round(v, 2) for k, v in vars(supplier_total_cost(exact, lane)).items()})
print("feasibility check:", check_plan_feasible(exact, lane, 0, Q, T) or "clean")

greedy = greedy_solve_subproblem(lane, Q, T, LT)
sa = sa_solve_subproblem(lane, Q, T, LT, SAConfig(seed=1))
print(f"\ngreedy (always the lowest-h child): {greedy.total_cost:.2f}")
print(f"simulated annealing from greedy:    {sa.total_cost:.2f}")
for beam in (1, 3, 10):
    print(f"A* with open list capped at {beam:>2}:     {solve_subproblem(lane, Q, T, LT, beam=beam).total_cost:.2f}")

small_q, small_t = 6, 3
ref = brute_force_subproblem(lane, small_q, small_t, LT)
mine = solve_subproblem(lane, small_q, small_t, LT, beam=None).total_cost
print(f"\nenumeration oracle on a {small_q}-unit, {small_t}-period copy: {ref.cost:.4f}; A*: {mine:.4f}")
