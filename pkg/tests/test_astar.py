import math

import pytest
from conftest import make_lane

from bilevel_procurement.astar import (
    OpenList,
    PlannerState,
    SearchNode,
    SearchStats,
    best_first_search,
    expand_node,
    heuristic_cost,
    is_goal_state,
    reconstruct_plan,
    resolve_stride,
    solve_subproblem,
    start_node,
)
from bilevel_procurement.model import InfeasibleSubproblem, check_plan_feasible


def _tree_search(tree, f_values, goal):
    """Run the generic search over an explicit tree where h carries the whole f."""
    nodes = {}

    def node(name, parent=None):
        n = SearchNode(name, 0.0, f_values[name], parent=parent)
        nodes[name] = n
        return n

    def expand(n):
        return [node(c, n) for c in tree.get(n.state, ())]

    trace = []
    found = best_first_search(node("start"), expand, lambda n: n.state == goal, trace=trace)
    return found, trace


class TestBookkeeping:
    tree = {"start": ["a", "d"], "a": ["b"], "d": ["c", "e"]}
    f = {"start": 0.0, "a": 1.0, "b": 2.0, "d": 3.0, "c": 4.0, "e": 5.0}

    def test_open_and_closed_lists(self):
        found, trace = _tree_search(self.tree, self.f, "e")
        assert found.state == "e"
        open_after_start, closed_after_start = trace[1]
        assert {n.state for n in open_after_start} == {"a", "d"}
        assert [n.state for n in closed_after_start] == ["start"]
        _, closed_at_end = trace[-1]
        assert [n.state for n in closed_at_end] == ["start", "a", "b", "d", "c"]

    def test_exhausted(self):
        found, _ = _tree_search(self.tree, self.f, "nowhere")
        assert found is None


class TestOpenList:
    def test_ties_break_by_insertion(self):
        ol = OpenList()
        a, b = SearchNode("a", 1.0, 0.0), SearchNode("b", 1.0, 0.0)
        ol.push(a)
        ol.push(b)
        assert ol.pop() is a

    def test_truncate_keeps_lowest(self):
        ol = OpenList(capacity=2)
        for k, f in enumerate([5.0, 1.0, 3.0, 2.0]):
            ol.push(SearchNode(k, f, 0.0))
        dropped = ol.truncate()
        assert sorted(n.f for n in dropped) == [3.0, 5.0]
        assert [n.f for n in ol.nodes()] == [1.0, 2.0]
        assert len(ol) == 2

    def test_discard(self):
        ol = OpenList()
        a, b = SearchNode("a", 1.0, 0.0), SearchNode("b", 2.0, 0.0)
        ol.push(a)
        ol.push(b)
        ol.discard(a)
        assert ol.pop() is b
        with pytest.raises(IndexError):
            ol.pop()

    def test_bad_capacity(self):
        with pytest.raises(ValueError):
            OpenList(0)


class TestExpand:
    def test_four_children(self):
        lane = make_lane(orc=2, ovc=1, pt=1, vcap=5, incap=10, vehicles=2)
        kids = expand_node(start_node(lane, 5, 10, 3), lane, 10, 3)
        assert [c.action[:2] for c in kids] == [(0, 0), (1, 0), (2, 0), (2, 1)]

    def test_overtime_only_at_top(self):
        lane = make_lane(orc=2, ovc=2, pt=1, vcap=5, incap=10)
        kids = expand_node(start_node(lane, 5, 10, 3), lane, 10, 3)
        assert all(yr == 2 for yr, yn, *_ in (c.action for c in kids) if yn > 0)

    def test_nothing_left_to_produce(self):
        lane = make_lane(ss=0, vcap=5, incap=10)
        parent = SearchNode(PlannerState(1, 4, 4), 0.0, 0.0)
        kids = expand_node(parent, lane, 5, 3)
        assert len(kids) == 1 and kids[0].action[:2] == (0, 0)

    def test_stride_keeps_endpoint(self):
        lane = make_lane(orc=7, ovc=0, pt=1, vcap=10, incap=20)
        kids = expand_node(start_node(lane, 20, 10, 3), lane, 10, 3, stride=3)
        assert [c.action[0] for c in kids] == [0, 3, 6, 7]

    def test_auto_stride(self):
        assert resolve_stride("auto", make_lane(orc=20, ovc=5, pt=1)) == 3
        assert resolve_stride("auto", make_lane(orc=2, ovc=1, pt=1)) == 1
        with pytest.raises(ValueError):
            resolve_stride(0, make_lane())

    def test_f_is_g_plus_h(self):
        lane = make_lane()
        for c in expand_node(start_node(lane, 5, 6, 2), lane, 6, 2):
            assert c.f == c.g + c.h


class TestHeuristic:
    def test_goal_is_zero(self):
        assert heuristic_cost(PlannerState(2, 0, 0), make_lane(ss=0), 1, 5) == 0.0
        assert is_goal_state(PlannerState(2, 0, 0), make_lane(ss=0))

    def test_unreachable_is_inf(self):
        lane = make_lane(orc=2, ovc=1, pt=1, vcap=5, vehicles=2)
        assert heuristic_cost(PlannerState(4, 0, 10), lane, 1, 5) == math.inf
        assert heuristic_cost(PlannerState(5, 0, 1), lane, 1, 5) == math.inf

    def test_no_delay_before_due(self):
        on = make_lane(gamma=1.0)
        off = make_lane(gamma=0.0)
        s = PlannerState(0, 0, 3)
        # two periods of production and fleet capacity finish before the due date
        assert heuristic_cost(s, on, 8, 10) == heuristic_cost(s, off, 8, 10)


class TestSolve:
    def test_plan_is_feasible_and_priced(self):
        lane = make_lane()
        plan = solve_subproblem(lane, 7, 4, 2, beam=None)
        assert check_plan_feasible(plan, lane, 0, 7, 4) == []
        assert plan.inventory[-1] == lane.ss
        assert plan.price > 0

    def test_chain_length(self):
        plan = solve_subproblem(make_lane(), 5, 3, 1)
        assert len(plan.prod_ord) == 3 and len(plan.inventory) == 4

    def test_zero_order(self):
        plan = solve_subproblem(make_lane(ss=2), 0, 3, 1)
        assert plan.quantity == 0 and not plan.setup.any()

    def test_safety_stock_does_not_replace_production(self):
        # opening stock covers the order but the store must end at ss again
        lane = make_lane(ss=10, incap=20)
        plan = solve_subproblem(lane, 5, 4, 1, beam=None)
        assert int(plan.prod_ord.sum() + plan.prod_ot.sum()) == 5
        assert plan.inventory[-1] == 10

    def test_infeasible(self):
        with pytest.raises(InfeasibleSubproblem):
            solve_subproblem(make_lane(orc=2, ovc=1, pt=1), 20, 2, 1)

    def test_negative_order(self):
        with pytest.raises(ValueError):
            solve_subproblem(make_lane(), -1, 3, 1)

    def test_stats(self):
        stats = SearchStats()
        solve_subproblem(make_lane(), 6, 4, 2, beam=None, stats=stats)
        assert stats.expanded > 0 and stats.generated >= stats.expanded

    def test_beam_never_beats_exact(self):
        lane = make_lane(orc=4, ovc=2, vcap=3, incap=8)
        exact = solve_subproblem(lane, 14, 5, 2, beam=None).total_cost
        for beam in (1, 2, 5, 10):
            assert solve_subproblem(lane, 14, 5, 2, beam=beam).total_cost >= exact - 1e-9

    def test_reconstruct_rejects_non_goal(self):
        lane = make_lane()
        with pytest.raises(ValueError):
            reconstruct_plan(start_node(lane, 3, 3, 1), lane, 3, 3)
