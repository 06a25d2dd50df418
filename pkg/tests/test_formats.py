from __future__ import annotations

import pytest

from labeled_stn.baseline import compile_components
from labeled_stn.compiler import compile_plan
from labeled_stn.dispatcher import Scenario, run
from labeled_stn.baseline import parallel_dispatch
from labeled_stn.formats import (
    compiled_size,
    parse_compiled,
    parse_enumeration,
    read_any,
    render_compiled,
    render_enumeration,
)
from labeled_stn.generator import GeneratorParams, generate
from labeled_stn.plan import PlanSyntaxError, rover_plan

HEADER = "var x { collect, charge }\nevent A\nevent B\nevent C\nevent D\nevent E\nevent F\n"


def test_rover_labeled_form():
    text = render_compiled(compile_plan(rover_plan()))
    assert text.startswith(HEADER)
    assert "zgroup {C, E, F} if {x=collect}\n" in text
    assert "zgroup {D, E, F} if {x=charge}\n" in text
    assert "conflict" not in text
    assert compiled_size(text) == len(text.encode())


def test_rover_enumeration_form():
    plan = rover_plan()
    text = render_enumeration(compile_components(plan), plan.space, plan.events)
    assert text.startswith(HEADER)
    assert text.count("component ") == 2
    assert "component {x=collect}\n" in text and "component {x=charge}\n" in text
    assert "zgroup {C, E, F}\n" in text


def test_size_counts_utf8_bytes():
    assert compiled_size("é") == 2


@pytest.mark.parametrize("seed", range(15))
def test_labeled_round_trip(seed):
    plan = generate(GeneratorParams(choices=3, events=7, seed=seed))
    form = compile_plan(plan)
    if not form:
        return
    text = render_compiled(form)
    back = parse_compiled(text)
    assert render_compiled(back) == text
    assert read_any(text).names == form.names


@pytest.mark.parametrize("seed", range(15))
def test_enumeration_round_trip(seed):
    plan = generate(GeneratorParams(choices=3, events=7, seed=seed))
    comps = compile_components(plan)
    text = render_enumeration(comps, plan.space, plan.events)
    back, space, events = parse_enumeration(text)
    assert events == plan.events and space.names == plan.space.names
    assert render_enumeration(back, space, events) == text
    assert isinstance(read_any(text), tuple)


def test_parsed_forms_dispatch_like_originals():
    plan = rover_plan()
    sc = Scenario()
    form = compile_plan(plan)
    comps = compile_components(plan)
    a = run(parse_compiled(render_compiled(form)), sc).render()
    assert a == run(form, sc).render()
    back, _, events = parse_enumeration(render_enumeration(comps, plan.space, plan.events))
    assert parallel_dispatch(back, events, sc).render() == parallel_dispatch(comps, plan.events, sc).render()


@pytest.mark.parametrize(
    "text",
    [
        "event A\nevent B\nedge A C {(1, {})}\n",
        "var x { 1, 2 }\nevent A\nevent B\nedge A B {(1, {x=3})}\n",
        "event A\nbogus\n",
        "event A\nevent B\nedge A B {(1 {})}\n",
    ],
)
def test_malformed_compiled_text(text):
    with pytest.raises(PlanSyntaxError):
        parse_compiled(text)
