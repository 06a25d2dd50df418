from __future__ import annotations

import math
import random

import numpy as np
import pytest

from labeled_stn.baseline import (
    ComponentSTN,
    DispatchableSTN,
    all_pairs,
    compile_components,
    dead_end,
    enumerate_component_stns,
    parallel_dispatch,
    stn_compile,
    stn_dispatch,
)
from labeled_stn.baseline import verify_schedule
from labeled_stn.compiler import compile_plan
from labeled_stn.dispatcher import ActivityEnd, Scenario, run
from labeled_stn.environments import CapacityError, ChoiceSpace
from labeled_stn.generator import GeneratorParams, generate
from labeled_stn.plan import LabeledConstraint, LabeledSTN, rover_plan

from conftest import binary_space

INF = math.inf


def component(events, edges) -> ComponentSTN:
    n = len(events)
    w = np.full((n, n), INF)
    np.fill_diagonal(w, 0.0)
    for (a, b), x in edges.items():
        w[events.index(a), events.index(b)] = x
    return ComponentSTN(ChoiceSpace().empty, list(events), w)


def test_rover_has_two_components():
    comps = enumerate_component_stns(rover_plan())
    assert [c.env.render() for c in comps] == ["{x=collect}", "{x=charge}"]
    assert all(c.consistent for c in comps)


def test_empty_space_has_one_component():
    sp = ChoiceSpace()
    comps = enumerate_component_stns(LabeledSTN(["A", "B"], sp, [LabeledConstraint("A", "B", 1, 2, sp.empty)]))
    assert len(comps) == 1 and comps[0].env.is_empty


def test_component_count_is_domain_product():
    sp = ChoiceSpace([("x", ["1", "2", "3"]), ("y", ["a", "b"])])
    assert len(enumerate_component_stns(LabeledSTN(["A"], sp, []))) == 6


def test_enumeration_cap():
    sp = binary_space(*[f"v{i}" for i in range(6)])
    with pytest.raises(CapacityError):
        enumerate_component_stns(LabeledSTN(["A"], sp, []), cap=32)


def test_inconsistent_components_are_flagged_not_dropped():
    sp = binary_space("x")
    x1 = sp.env({"x": "1"})
    plan = LabeledSTN(
        ["A", "B"],
        sp,
        [LabeledConstraint("A", "B", 0, 5, sp.empty), LabeledConstraint("A", "B", 7, 9, x1)],
    )
    comps = enumerate_component_stns(plan)
    assert [(c.env.render(), c.consistent) for c in comps] == [("{x=1}", False), ("{x=2}", True)]
    assert stn_compile(comps[0]) is None


def test_upper_dominated_edge_is_pruned():
    c = component("ABC", {("A", "B"): 2, ("B", "C"): 3, ("A", "C"): 5})
    g = stn_compile(c)
    assert g.edges == {(0, 1): 2.0, (1, 2): 3.0}


def test_lower_dominated_edge_is_pruned():
    c = component("ABC", {("A", "B"): -5, ("B", "C"): 1, ("A", "C"): -4})
    g = stn_compile(c)
    assert (0, 2) not in g.edges
    assert g.edges[(0, 1)] == -5.0


def test_single_edge_is_unchanged():
    g = stn_compile(component("AB", {("A", "B"): 4}))
    assert g.edges == {(0, 1): 4.0}


def test_rigid_pair_contracts_to_leader():
    g = stn_compile(component("ABC", {("A", "B"): 3, ("B", "A"): -3, ("B", "C"): 2}))
    assert g.leaders == {0: 0, 1: 0, 2: 2}
    assert g.edges[(0, 1)] == 3.0 and g.edges[(1, 0)] == -3.0
    assert g.edges[(0, 2)] == 5.0


def test_zero_offset_members_form_a_group():
    g = stn_compile(component("AB", {("A", "B"): 0, ("B", "A"): 0}))
    assert g.groups == [frozenset({0, 1})]
    assert str(g.edges[(1, 0)]) == "0.0"


def test_window_failure_after_upper_bound():
    g = stn_compile(component("AB", {("A", "B"): 8, ("B", "A"): -2}))
    early = stn_dispatch(g)
    assert early.completed and early.schedule == {"A": 0.0, "B": 2.0}
    sc = Scenario(activities={"B": ActivityEnd("A", 12, 12)}, controlled=["A"])
    late = stn_dispatch(g, sc)
    assert not late.completed and late.fail_time == 9.0


def test_unconstrained_single_event():
    g = stn_compile(component("A", {}))
    tr = stn_dispatch(g)
    assert tr.completed and tr.schedule == {"A": 0.0}


def test_no_consistent_component_fails_immediately():
    tr = parallel_dispatch([], ["A"])
    assert not tr.completed and tr.fail_time == 0.0


def test_rover_parallel_matches_labeled():
    plan = rover_plan()
    sc = Scenario(
        activities={"B": ActivityEnd("A", 45, 45), "C": ActivityEnd("B", 50, 50), "D": ActivityEnd("B", 0, 0)},
        controlled=["A", "E", "F"],
    )
    a = parallel_dispatch(compile_components(plan), plan.events, sc)
    b = run(compile_plan(plan), sc)
    assert a.completed and b.completed
    assert a.schedule == b.schedule


def test_verify_schedule_rover():
    plan = rover_plan()
    sched = dict(A=0, B=45, C=95, D=45, E=95, F=95)
    assert [e.render() for e in verify_schedule(plan, sched)] == ["{x=collect}"]
    sched["F"] = 101
    sched["E"] = 101
    assert verify_schedule(plan, sched) == []


def _apsp_graph(c: ComponentSTN, ref: DispatchableSTN) -> DispatchableSTN:
    d = all_pairs(c.weights)
    edges = {
        (i, j): float(d[i, j])
        for i in range(c.n)
        for j in range(c.n)
        if i != j and math.isfinite(d[i, j])
    }
    return DispatchableSTN(c.env, list(c.events), edges, ref.groups, ref.leaders)


@pytest.mark.parametrize("seed", range(10))
def test_pruned_graph_dispatches_as_well_as_apsp(seed):
    plan = generate(GeneratorParams(choices=1, events=6, seed=seed))
    rng = random.Random(seed)
    for c in enumerate_component_stns(plan):
        g = stn_compile(c)
        if g is None:
            continue
        full = _apsp_graph(c, g)
        for _ in range(20):
            # with every event controllable both must succeed; the chosen times may differ
            sc = Scenario(seed=rng.randrange(10**6), policy=rng.choice(["earliest", "latest", "random"]))
            for tr in (stn_dispatch(g, sc), stn_dispatch(full, sc)):
                assert tr.completed
                assert c.env in verify_schedule(plan, tr.schedule)


def _component_accepts(c: ComponentSTN, sched, events) -> bool:
    for i, a in enumerate(events):
        for j, b in enumerate(events):
            if i != j and sched[b] - sched[a] > c.weights[i, j] + 1e-9:
                return False
    return True


@pytest.mark.parametrize("seed", range(10))
def test_verify_schedule_matches_components(seed):
    plan = generate(GeneratorParams(choices=3, events=5, seed=seed))
    rng = random.Random(seed)
    comps = enumerate_component_stns(plan)
    for _ in range(100):
        sched = {e: float(rng.randint(0, 60)) for e in plan.events}
        sat = verify_schedule(plan, sched)
        want = [c.env for c in comps if _component_accepts(c, sched, plan.events)]
        assert sat == want


def test_dead_end():
    g = rover_plan()
    assert not dead_end(g, {"A": 0.0}, 1.0)
    assert dead_end(g, {"A": 0.0}, 101.0)
    # collect still fits with C = E = F = 100
    assert not dead_end(g, {"A": 0.0, "B": 45.0}, 100.0)
    # C past 100 rules out collect, and charge needed D by 95
    assert dead_end(g, {"A": 0.0, "B": 45.0, "C": 106.0}, 106.0)


def test_dead_end_respects_realized_durations():
    sp = ChoiceSpace()
    plan = LabeledSTN(
        ["A", "B", "C"],
        sp,
        [LabeledConstraint("A", "B", 0, 10, sp.empty), LabeledConstraint("B", "C", 0, 0, sp.empty)],
    )
    # B is done at 6; C could still follow at 6 unless the world puts it at 8
    assert not dead_end(plan, {"A": 0.0, "B": 6.0}, 6.0)
    assert dead_end(plan, {"A": 0.0, "B": 6.0}, 6.0, activities={"C": ("A", 8.0)})
