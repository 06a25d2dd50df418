"""Benchmark harness: compiled size, compile time and dispatch latency for
both pipelines on a generated suite."""

from __future__ import annotations

import csv
import dataclasses
import statistics
import time
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence, TextIO

from .baseline import compile_components, parallel_dispatch
from .compiler import Infeasible, compile_plan
from .dispatcher import run
from .formats import compiled_size, render_compiled, render_enumeration
from .generator import GeneratorParams, generate, random_scenario

__all__ = [
    "BUCKET_EDGES",
    "BenchRecord",
    "bench",
    "bench_instance",
    "bucket_medians",
    "default_suite",
    "read_csv",
    "write_csv",
]

BUCKET_EDGES = (4, 16, 64, 256, 1024)


@dataclass
class BenchRecord:
    problem_id: str
    components: int
    labeled_bytes: int
    enumeration_bytes: int
    labeled_compile_ns: int
    enumeration_compile_ns: int
    labeled_latency_ns: int
    enumeration_latency_ns: int
    status: str = "ok"

    @property
    def ratio(self) -> float:
        return self.enumeration_bytes / self.labeled_bytes if self.labeled_bytes else 0.0


FIELDS = [f.name for f in dataclasses.fields(BenchRecord)]


def default_suite(
    per_size: int = 3,
    sharing: float = 0.5,
    choices: Iterable[int] = range(2, 12),
    seed: int = 0,
) -> list[tuple[str, GeneratorParams]]:
    """Binary choices with event counts growing alongside, capped at 22."""
    out = []
    for k in choices:
        events = min(22, 2 * k + 4)
        for i in range(per_size):
            p = GeneratorParams(choices=k, arity=2, events=events, ratio=1.5, sharing=sharing, seed=seed + 1000 * k + i)
            out.append((f"b{k}-e{events}-s{p.seed}", p))
    return out


def _median_ns(f: Callable[[], object], repeats: int):
    times = []
    result = None
    for _ in range(max(1, repeats)):
        t0 = time.perf_counter_ns()
        result = f()
        times.append(time.perf_counter_ns() - t0)
    return result, int(statistics.median(times))


def bench_instance(pid: str, params: GeneratorParams, repeats: int = 5, cap: int = 4096) -> BenchRecord:
    rec = BenchRecord(pid, 0, 0, 0, 0, 0, 0, 0)
    try:
        plan = generate(params)
        form, rec.labeled_compile_ns = _median_ns(lambda: compile_plan(plan), repeats)
        comps, rec.enumeration_compile_ns = _median_ns(lambda: compile_components(plan, cap), repeats)
        rec.components = len(comps)
        if isinstance(form, Infeasible) != (not comps):
            rec.status = "verdict mismatch"
            return rec
        if isinstance(form, Infeasible):
            rec.status = "infeasible"
            return rec
        rec.labeled_bytes = compiled_size(render_compiled(form))
        rec.enumeration_bytes = compiled_size(render_enumeration(comps, plan.space, plan.events))
        sc = random_scenario(plan, params.seed, spread=2)
        durations = sc.durations(plan.events)
        rec.labeled_latency_ns = run(form, sc, durations=durations).max_latency_ns
        rec.enumeration_latency_ns = parallel_dispatch(
            comps, plan.events, sc, durations=durations
        ).first_execution_latency_ns
    except Exception as exc:  # recorded, never fatal to the suite
        rec.status = f"error: {type(exc).__name__}: {exc}"
    return rec


def bench(
    suite: Sequence[tuple[str, GeneratorParams]],
    out: TextIO | None = None,
    repeats: int = 5,
    progress: Callable[[BenchRecord], None] | None = None,
) -> list[BenchRecord]:
    records = []
    writer = None
    if out is not None:
        writer = csv.DictWriter(out, fieldnames=FIELDS)
        writer.writeheader()
    for pid, params in suite:
        rec = bench_instance(pid, params, repeats)
        records.append(rec)
        if writer is not None:
            writer.writerow(dataclasses.asdict(rec))
            out.flush()
        if progress is not None:
            progress(rec)
    return records


def write_csv(records: Iterable[BenchRecord], out: TextIO) -> None:
    writer = csv.DictWriter(out, fieldnames=FIELDS)
    writer.writeheader()
    for r in records:
        writer.writerow(dataclasses.asdict(r))


def read_csv(f: TextIO) -> list[BenchRecord]:
    out = []
    for row in csv.DictReader(f):
        vals = {k: (row[k] if k in ("problem_id", "status") else int(row[k])) for k in FIELDS}
        out.append(BenchRecord(**vals))
    return out


def bucket_medians(
    records: Iterable[BenchRecord], edges: Sequence[int] = BUCKET_EDGES
) -> list[tuple[int, int, float]]:
    """``(low, count, median ratio)`` per non-empty bucket ``[edges[i], edges[i+1])``.

    The last bucket is open-ended; instances below ``edges[0]`` are left out.
    """
    buckets: dict[int, list[float]] = {}
    for r in records:
        if r.status != "ok" or r.components < edges[0]:
            continue
        low = max(e for e in edges if e <= r.components)
        buckets.setdefault(low, []).append(r.ratio)
    return [(low, len(v), statistics.median(v)) for low, v in sorted(buckets.items())]
