"""Acceptance suite: one test per criterion, each reporting a PASS/FAIL line.

Run under pytest (lines appear in the terminal summary) or directly with
``python tests/test_acceptance.py``.
"""

from __future__ import annotations

import contextlib
import random
import subprocess
import sys
import time
from pathlib import Path

import pytest

from labeled_stn.baseline import (
    compile_components,
    dead_end,
    enumerate_component_stns,
    parallel_dispatch,
    verify_schedule,
)
from labeled_stn.bench import bench, bucket_medians, default_suite
from labeled_stn.compiler import Infeasible, compile_plan, labeled_bellman_ford
from labeled_stn.dispatcher import parse_scenario, run
from labeled_stn.environments import ConflictDatabase
from labeled_stn.generator import GeneratorParams, generate, random_scenario
from labeled_stn.plan import rover_plan, to_labeled_distance_graph

HERE = Path(__file__).resolve().parent
sys.path.insert(0, str(HERE))
from conftest import bellman_ford  # noqa: E402

RESULTS: dict[int, tuple[bool, str]] = {}


@contextlib.contextmanager
def criterion(n: int, title: str):
    note: list[str] = []
    try:
        yield note
    except BaseException as exc:
        RESULTS[n] = (False, f"{title}: {type(exc).__name__}: {str(exc).splitlines()[0] if str(exc) else ''}")
        raise
    RESULTS[n] = (True, f"{title}: {'; '.join(note)}" if note else title)


def report_lines() -> list[str]:
    out = []
    for n in range(1, 9):
        if n in RESULTS:
            ok, text = RESULTS[n]
            out.append(f"criterion {n} {'PASS' if ok else 'FAIL'} {text}")
        else:
            out.append(f"criterion {n} NOT RUN")
    return out


# -- shared workloads ----------------------------------------------------------------


def _mixed_params(seed: int) -> GeneratorParams:
    r = random.Random(seed)
    arity = r.choice([2, 2, 3])
    return GeneratorParams(
        choices=r.randint(1, 4 if arity == 3 else 6),
        arity=arity,
        events=r.randint(4, 10),
        ratio=r.choice([1.2, 1.5, 2.0]),
        rigid_prob=r.choice([0.0, 0.05, 0.3]),
        sharing=r.choice([0.0, 0.3, 0.6]),
        seed=seed,
    )


_FEASIBLE: list = []


def feasible_suite(count: int = 200):
    """``count`` generated plans with at least one consistent component, compiled both ways."""
    seed = 0
    while len(_FEASIBLE) < count:
        plan = generate(_mixed_params(seed))
        form = compile_plan(plan)
        comps = compile_components(plan)
        assert isinstance(form, Infeasible) == (not comps), f"verdicts differ on seed {seed}"
        if comps:
            _FEASIBLE.append((seed, plan, form, comps))
        seed += 1
    return _FEASIBLE[:count]


_BENCH: dict[float, list] = {}


def bench_records(sharing: float):
    if sharing not in _BENCH:
        _BENCH[sharing] = bench(default_suite(per_size=3, sharing=sharing), repeats=1)
    return _BENCH[sharing]


# -- criteria ------------------------------------------------------------------------

ROVER_SCENARIO = """\
seed 0
policy earliest
tick 1
event A controlled
event B activity-end A fixed 45
event C activity-end B fixed 50
event D activity-end B fixed 0
event E controlled
event F controlled
"""


def test_criterion_1_rover_end_to_end():
    with criterion(1, "rover end to end") as note:
        t0 = time.perf_counter()
        plan = rover_plan()
        trace = run(compile_plan(plan), parse_scenario(ROVER_SCENARIO))
        elapsed = time.perf_counter() - t0
        assert trace.completed
        assert trace.schedule == dict(A=0, B=45, C=95, D=45, E=95, F=95)
        when = [r.time for r in trace.records if "{x=charge}" in r.conflicts]
        assert when and when[0] >= trace.schedule["B"]
        assert [e.render() for e in verify_schedule(plan, trace.schedule)] == ["{x=collect}"]
        assert elapsed < 1.0
        note.append(f"schedule A=0 B=45 C=E=F=95, {{x=charge}} at t={when[0]:g}, {elapsed * 1000:.0f} ms")


WORKED = [
    "test_environments.py::test_subsumes_worked_example",  # 4.6
    "test_lvs.py::test_dominance_examples",  # 4.8
    "test_lvs.py::test_query_examples",  # 5.2, 5.3
    "test_environments.py::test_constituent_kernels",  # 5.7
    "test_environments.py::test_union_examples",  # 5.9
    "test_lvs.py::test_apply_examples",  # 5.11, 5.14
    "test_lvs.py::test_insert_replaces_dominated_value",  # 5.14
    "test_dispatcher.py::test_execution_updates_labeled_windows",  # 6.3
    "test_dispatcher.py::test_executability_worked_example",  # 6.7
    "test_dispatcher.py::test_bounds_after_execution_worked_example",  # 6.7
    "test_compiler.py::test_first_relaxation_keeps_both_pairs",  # 7.4
    "test_compiler.py::test_negative_cycle_conflict_worked_example",  # 7.5
    "test_compiler.py::test_sssp_distances_worked_example",  # 7.7
    "test_compiler.py::test_valid_paths_worked_example",  # 7.7
    "test_compiler.py::test_pruning_worked_example",  # 7.13
    "test_compiler.py::test_three_maximal_rigid_components",  # 7.15
    "test_compiler.py::test_rewrite_worked_example",  # 7.16
]


def test_criterion_2_worked_examples():
    with criterion(2, "worked examples") as note:
        r = subprocess.run(
            [sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider", *WORKED],
            cwd=HERE,
            capture_output=True,
            text=True,
        )
        tail = r.stdout.strip().splitlines()[-1] if r.stdout.strip() else r.stderr.strip()
        assert r.returncode == 0, tail
        note.append(tail)


def test_criterion_3_compilation_oracle():
    with criterion(3, "compilation oracle") as note:
        t0 = time.perf_counter()
        envs = 0
        for seed in range(100):
            r = random.Random(seed)
            plan = generate(
                GeneratorParams(choices=r.randint(0, 6), events=r.randint(3, 8), rigid_prob=0.1, seed=seed)
            )
            g = to_labeled_distance_graph(plan)
            for s in range(len(g)):
                db = ConflictDatabase(plan.space)
                st = labeled_bellman_ford(g, s, db)
                for full in plan.space.complete_environments():
                    dist, neg = bellman_ford(len(g), g.project(full), s)
                    assert neg == db.is_conflicted(full), (seed, s, full.render())
                    if not neg:
                        assert [st.d[v].best(full) for v in range(len(g))] == dist, (seed, s, full.render())
                    envs += 1
            form = compile_plan(plan)
            for c in enumerate_component_stns(plan):
                if isinstance(form, Infeasible):
                    assert not c.consistent, seed
                else:
                    assert c.consistent != form.conflicts.is_conflicted(c.env), (seed, c.env.render())
        elapsed = time.perf_counter() - t0
        assert elapsed < 300
        note.append(f"100 plans, {envs} (source, environment) checks, {elapsed:.1f} s")


def test_criterion_4_dispatch_oracle():
    with criterion(4, "dispatch oracle") as note:
        t0 = time.perf_counter()
        agree = completed = 0
        for i, (seed, plan, form, comps) in enumerate(feasible_suite(200)):
            sc = random_scenario(plan, seed, policy=("earliest", "latest", "random")[i % 3], spread=4)
            d = sc.durations(plan.events)
            a = run(form, sc, durations=d)
            b = parallel_dispatch(comps, plan.events, sc, durations=d)
            assert a.completed == b.completed, (seed, a.status, b.status)
            agree += 1
            for tr in (a, b):
                if tr.completed:
                    assert verify_schedule(plan, tr.schedule), seed
            completed += a.completed
        elapsed = time.perf_counter() - t0
        assert agree == 200 and elapsed < 600
        note.append(f"{agree}/200 agree, {completed} completed, {elapsed:.1f} s")


def test_criterion_5_soundness_under_disturbance():
    with criterion(5, "soundness under disturbance") as note:
        draws = completed = failed = 0
        suite = feasible_suite(200)
        for seed, plan, form, _ in suite:
            for k in range(10):
                rng = random.Random(seed * 100 + k)
                sc = random_scenario(
                    plan,
                    rng.randrange(10**9),
                    policy=rng.choice(["earliest", "latest", "random"]),
                    activity_prob=0.5,
                    spread=rng.choice([2, 6, 12]),
                )
                durations = sc.durations(plan.events)
                tr = run(form, sc, durations=durations)
                draws += 1
                if tr.completed:
                    completed += 1
                    assert verify_schedule(plan, tr.schedule), (seed, k)
                else:
                    failed += 1
                    world = {e: (a.driver, durations[e]) for e, a in sc.activities.items()}
                    assert dead_end(plan, tr.schedule, tr.fail_time, activities=world), (seed, k, tr.fail_time)
        assert draws == 2000
        note.append(f"{draws} draws, {completed} completed consistently, {failed} failures all dead ends")


def test_criterion_6_size_trend():
    with criterion(6, "size reduction trend") as note:
        recs = bench_records(0.5)
        assert all(r.status in ("ok", "infeasible") for r in recs), [r.status for r in recs if r.status != "ok"]
        assert min(r.components for r in recs if r.status == "ok") <= 4
        assert max(r.components for r in recs) >= 1024
        buckets = bucket_medians(recs)
        meds = [m for _, _, m in buckets]
        note.append("bucket medians " + ", ".join(f">={lo}: {m:.1f}x (n={c})" for lo, c, m in buckets))
        assert all(a < b for a, b in zip(meds, meds[1:])), meds
        assert buckets[-1][0] >= 1024 and meds[-1] > 50, meds


def test_criterion_7_worst_case_size():
    with criterion(7, "worst-case size") as note:
        recs = [r for r in bench_records(0.0) if r.status == "ok"]
        worst = max(recs, key=lambda r: r.labeled_bytes / r.enumeration_bytes)
        w = worst.labeled_bytes / worst.enumeration_bytes
        note.append(f"{len(recs)} instances at sharing 0, worst labeled/enumeration {w:.2f} ({worst.problem_id})")
        assert w <= 1.5


def test_criterion_8_latency():
    with criterion(8, "dispatch latency") as note:
        recs = [r for r in bench_records(0.5) if r.status == "ok"]
        inside = [r for r in recs if r.components <= 1024]
        outliers = [r for r in recs if r.components > 1024 and r.labeled_latency_ns >= 100e6]
        worst = max(r.labeled_latency_ns for r in inside) / 1e6
        note.append(
            f"max {worst:.1f} ms over {len(inside)} instances up to 1024 components; "
            f"{len(outliers)} outliers above 1024"
        )
        assert worst < 100


if __name__ == "__main__":
    code = pytest.main([__file__, "-q", "-p", "no:cacheprovider"])
    sys.exit(code)
