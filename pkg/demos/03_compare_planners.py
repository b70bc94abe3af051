"""Benchmark in miniature: PSO with A*, SA and greedy lower levels.

Runs three problems from the small suite with a few repetitions each and
prints the mean deviation of every variant from the best objective any
run reached. The full-size version of this run is part of the acceptance
tests (tests/test_acceptance.py).

    python demos/03_compare_planners.py
"""

from bilevel_procurement.baselines import SAConfig, compare_suite, suite_means
from bilevel_procurement.instances import small_suite
from bilevel_procurement.pso import SwarmConfig

problems = small_suite(0)[:3]
algs = ("astar", "sa", "greedy")


def progress(name, alg, rep, report):
    print(f"  {name} rep {rep} {alg:<6} objective {report.objective:>12.1f}  {report.runtime:5.2f}s")


rows = compare_suite(problems, algs, repetitions=3, seed=0, swarm=SwarmConfig(particles=8, iterations=8),
                     beam=10, stride="auto", sa=SAConfig(moves=100), progress=progress)

print("\nproblem         " + "".join(f"{a:>10}" for a in algs))
for r in rows:
    print(f"{r.problem:<16}" + "".join(f"{r.deviation[a]:>10.2%}" for a in algs))
means = suite_means(rows)
print(f"{'mean':<16}" + "".join(f"{means[a]:>10.2%}" for a in algs))
