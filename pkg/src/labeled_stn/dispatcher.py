"""Greedy real-time dispatch of a compiled plan over a simulated clock.

The tick loop itself is engine-agnostic: :class:`LabeledEngine` decides
executability from labeled windows and the conflict database, while the
enumeration baseline plugs in its own engine with the same interface.
"""

from __future__ import annotations

import math
import random
import re
import time
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Protocol, Sequence

from .compiler import DispatchableForm
from .environments import ConflictDatabase, Environment, minimal_environments
from .lvs import EPS, LabeledValueSet, Ordering, format_number

__all__ = [
    "ActivityEnd",
    "DispatchState",
    "ExecutionTrace",
    "LabeledEngine",
    "POLICIES",
    "Scenario",
    "TickRecord",
    "candidate_sets",
    "default_horizon",
    "executable",
    "parse_scenario",
    "propagate_execution",
    "render_scenario",
    "run",
    "run_engine",
]

INF = math.inf
POLICIES = ("earliest", "latest", "random")


# -- scenario ---------------------------------------------------------------------


@dataclass(frozen=True)
class ActivityEnd:
    """An event released ``duration`` after its driver executes."""

    driver: str
    low: float
    high: float

    @property
    def fixed(self) -> bool:
        return self.low == self.high

    def draw(self, rng: random.Random) -> float:
        if self.fixed:
            return self.low
        if float(self.low).is_integer() and float(self.high).is_integer():
            return float(rng.randint(int(self.low), int(self.high)))
        return rng.uniform(self.low, self.high)


@dataclass
class Scenario:
    seed: int = 0
    policy: str = "earliest"
    tick: float = 1.0
    activities: dict[str, ActivityEnd] = field(default_factory=dict)
    controlled: list[str] = field(default_factory=list)

    def durations(self, events: Sequence[str], seed: int | None = None) -> dict[str, float]:
        """Draw every activity duration up front, in event order."""
        rng = random.Random(self.seed if seed is None else seed)
        return {e: self.activities[e].draw(rng) for e in events if e in self.activities}


_SCEN_EVENT = re.compile(
    r"event\s+(\S+)\s+(?:(controlled)|activity-end\s+(\S+)\s+(?:fixed\s+(\S+)|uniform\s+(\S+)\s+(\S+)))\s*$"
)


def parse_scenario(text: str) -> Scenario:
    sc = Scenario()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key = line.split(None, 1)[0]
        try:
            if key == "seed":
                sc.seed = int(line.split()[1])
            elif key == "policy":
                sc.policy = line.split()[1]
                if sc.policy not in POLICIES:
                    raise ValueError(f"unknown policy {sc.policy!r}")
            elif key == "tick":
                sc.tick = float(line.split()[1])
                if sc.tick <= 0:
                    raise ValueError("tick must be positive")
            elif key == "event":
                m = _SCEN_EVENT.match(line)
                if not m:
                    raise ValueError("malformed event line")
                name, ctrl, driver, fixed, lo, hi = m.groups()
                if ctrl:
                    sc.controlled.append(name)
                elif fixed is not None:
                    sc.activities[name] = ActivityEnd(driver, float(fixed), float(fixed))
                else:
                    lo_f, hi_f = float(lo), float(hi)
                    if hi_f < lo_f:
                        raise ValueError("empty duration range")
                    sc.activities[name] = ActivityEnd(driver, lo_f, hi_f)
            else:
                raise ValueError(f"unknown keyword {key!r}")
        except (IndexError, ValueError) as exc:
            raise ValueError(f"scenario line {lineno}: {exc}") from None
    return sc


def render_scenario(sc: Scenario, events: Sequence[str] | None = None) -> str:
    lines = [f"seed {sc.seed}", f"policy {sc.policy}", f"tick {format_number(sc.tick)}"]
    names = list(events) if events is not None else sorted(set(sc.controlled) | set(sc.activities))
    for e in names:
        act = sc.activities.get(e)
        if act is None:
            lines.append(f"event {e} controlled")
        elif act.fixed:
            lines.append(f"event {e} activity-end {act.driver} fixed {format_number(act.low)}")
        else:
            lines.append(
                f"event {e} activity-end {act.driver} uniform {format_number(act.low)} {format_number(act.high)}"
            )
    return "\n".join(lines) + "\n"


# -- trace ------------------------------------------------------------------------


@dataclass
class TickRecord:
    time: float
    executed: list[tuple[str, ...]]
    conflicts: list[str]

    def render(self) -> str:
        parts = [f"t={format_number(self.time)}"]
        if self.executed:
            parts.append("execute " + " ".join("{" + ", ".join(s) + "}" for s in self.executed))
        if self.conflicts:
            parts.append("conflicts " + " ".join(self.conflicts))
        return " ".join(parts)


@dataclass
class ExecutionTrace:
    records: list[TickRecord]
    completed: bool
    schedule: dict[str, float]
    fail_time: float | None = None
    max_latency_ns: int = 0
    first_execution_latency_ns: int = 0
    events: list[str] = field(default_factory=list)

    @property
    def status(self) -> str:
        return "COMPLETED" if self.completed else "FAILED"

    def render(self) -> str:
        lines = [r.render() for r in self.records]
        if self.completed:
            order = self.events or sorted(self.schedule)
            lines.append(
                "COMPLETED " + " ".join(f"{e}={format_number(self.schedule[e])}" for e in order)
            )
        else:
            lines.append(f"FAILED t={format_number(self.fail_time)}")
        return "\n".join(lines) + "\n"


# -- engine protocol and the shared tick loop --------------------------------------


class Engine(Protocol):
    names: list[str]

    def unexecuted(self) -> list[int]: ...
    def candidates(self) -> list[tuple[int, ...]]: ...
    def assess(self, s: tuple[int, ...], t: float): ...
    def commit(self, s: tuple[int, ...], t: float, token) -> list[str]: ...
    def force(self, s: tuple[int, ...], t: float) -> tuple[list[str], bool]: ...
    def check_missed(self, t: float) -> tuple[list[str], bool]: ...
    def due(self, s: tuple[int, ...], t: float, tick: float) -> bool: ...
    def is_free(self, token) -> bool: ...
    def executed_times(self) -> dict[int, float]: ...


def run_engine(
    engine: Engine,
    scenario: Scenario,
    policy: str | None = None,
    seed: int | None = None,
    tick: float | None = None,
    horizon: float | None = None,
    durations: Mapping[str, float] | None = None,
) -> ExecutionTrace:
    names = engine.names
    policy = policy or scenario.policy
    if policy not in POLICIES:
        raise ValueError(f"unknown policy {policy!r}")
    seed = scenario.seed if seed is None else seed
    tick = scenario.tick if tick is None else tick
    if durations is None:
        durations = scenario.durations(names, seed)
    coin = random.Random(seed * 7919 + 17)
    activity = {names.index(e): a for e, a in scenario.activities.items() if e in names}
    driver = {v: names.index(a.driver) for v, a in activity.items()}
    duration = {names.index(e): d for e, d in durations.items() if e in names}
    horizon = INF if horizon is None else horizon

    records: list[TickRecord] = []
    max_lat = 0
    first_lat = 0
    t = 0.0

    def release(v: int):
        done = engine.executed_times()
        drv = driver[v]
        if drv not in done:
            return None
        return done[drv] + duration[v]

    def released(v: int) -> bool:
        r = release(v)
        return r is not None and r <= t + EPS

    def close_tick(start: int, executed_now, conflicts_now) -> None:
        nonlocal max_lat, first_lat
        elapsed = time.perf_counter_ns() - start
        max_lat = max(max_lat, elapsed)
        if executed_now and not first_lat:
            first_lat = elapsed
        if executed_now or conflicts_now:
            records.append(TickRecord(t, executed_now, conflicts_now))

    def trace(ok: bool) -> ExecutionTrace:
        sched = {names[v]: x for v, x in engine.executed_times().items()}
        return ExecutionTrace(
            records, ok, sched, None if ok else t, max_lat, first_lat, list(names)
        )

    while engine.unexecuted():
        if t > horizon:
            return trace(False)
        start = time.perf_counter_ns()
        executed_now: list[tuple[str, ...]] = []
        conflicts_now: list[str] = []
        new, ok = engine.check_missed(t)
        conflicts_now.extend(new)
        if not ok:
            close_tick(start, executed_now, conflicts_now)
            return trace(False)
        coins: dict[tuple[int, ...], bool] = {}

        def wanted(s: tuple[int, ...]) -> bool:
            if any(v in activity for v in s):
                return True
            if policy == "earliest":
                return True
            if engine.due(s, t, tick):
                return True
            if policy == "random":
                if s not in coins:
                    coins[s] = coin.random() < 0.5
                return coins[s]
            return False

        progress = True
        while progress:
            progress = False
            cands = [
                s
                for s in engine.candidates()
                if all(v not in activity or released(v) for v in s)
            ]
            for free_pass in (True, False):
                for s in cands:
                    token = engine.assess(s, t)
                    if token is None:
                        continue
                    if free_pass and not engine.is_free(token):
                        continue
                    if not wanted(s):
                        continue
                    conflicts_now.extend(engine.commit(s, t, token))
                    executed_now.append(tuple(names[v] for v in s))
                    progress = True
                    break
                if progress:
                    break
        pending = set(engine.unexecuted())
        for v in sorted(activity):
            if v in pending and released(v):
                new, ok = engine.force((v,), t)
                conflicts_now.extend(new)
                executed_now.append((names[v],))
                if not ok:
                    close_tick(start, executed_now, conflicts_now)
                    return trace(False)
        close_tick(start, executed_now, conflicts_now)
        if engine.unexecuted():
            t += tick
    return trace(True)


# -- labeled engine -----------------------------------------------------------------


@dataclass
class DispatchState:
    clock: float
    executed: dict[int, float]
    upper: list[LabeledValueSet]
    lower: list[LabeledValueSet]
    conflicts: ConflictDatabase
    zero_related: list[tuple[frozenset[int], Environment]]


class LabeledEngine:
    def __init__(self, form: DispatchableForm):
        self.form = form
        g = form.graph
        self.names = list(g.names)
        n = len(g)
        self.out_adj: list[list[tuple[int, list]]] = [[] for _ in range(n)]
        self.in_adj: list[list[tuple[int, list]]] = [[] for _ in range(n)]
        for (u, v), s in sorted(g.weights.items()):
            pairs = list(s)
            self.out_adj[u].append((v, pairs))
            self.in_adj[v].append((u, pairs))
        empty = form.space.empty
        self.state = DispatchState(
            0.0,
            {},
            [LabeledValueSet([(INF, empty)], Ordering.MIN) for _ in range(n)],
            [LabeledValueSet([(-INF, empty)], Ordering.MAX) for _ in range(n)],
            form.conflicts.copy(),
            list(form.zero_related),
        )

    # engine protocol
    def unexecuted(self) -> list[int]:
        done = self.state.executed
        return [v for v in range(len(self.names)) if v not in done]

    def executed_times(self) -> dict[int, float]:
        return self.state.executed

    def candidates(self) -> list[tuple[int, ...]]:
        return candidate_sets(self.state, len(self.names))

    def assess(self, s, t):
        ok, envs = executable(self, s, t)
        return envs if ok else None

    def is_free(self, token) -> bool:
        return not token

    def commit(self, s, t, token) -> list[str]:
        added = [e.render() for e in token if self.state.conflicts.add_conflict(e)]
        for v in s:
            self.state.executed[v] = t
        for v in s:
            propagate_execution(self, v, t)
        return added

    def force(self, s, t):
        envs = _violations(self, s, t)
        added = self.commit(s, t, minimal_environments(envs))
        return added, self.state.conflicts.some_complete_consistent()

    def check_missed(self, t):
        return check_missed_upper_bounds(self, t)

    def due(self, s, t, tick) -> bool:
        db = self.state.conflicts
        finite = False
        for v in s:
            for u, e in self.state.upper[v]:
                if u == INF or db.is_conflicted(e) or not db.is_viable(e):
                    continue
                finite = True
                if u < t + tick - EPS:
                    return True
        return not finite


def propagate_execution(engine: LabeledEngine, a: int, t: float) -> None:
    st = engine.state
    db = st.conflicts
    for b, pairs in engine.out_adj[a]:
        if b in st.executed:
            continue
        for w, e in pairs:
            st.upper[b].insert(w + t, e, db)
    for b, pairs in engine.in_adj[a]:
        if b in st.executed:
            continue
        for w, e in pairs:
            st.lower[b].insert(t - w, e, db)


def candidate_sets(state: DispatchState, n: int) -> list[tuple[int, ...]]:
    done = state.executed
    singles = [(v,) for v in range(n) if v not in done]
    seen = set(singles)
    groups = []
    for members, env in state.zero_related:
        if state.conflicts.is_conflicted(env):
            continue
        rest = tuple(sorted(m for m in members if m not in done))
        if rest and rest not in seen:
            seen.add(rest)
            groups.append(rest)
    groups.sort()
    return singles + groups


def _violations(engine: LabeledEngine, s: Sequence[int], t: float) -> list[Environment]:
    st = engine.state
    db = st.conflicts
    sset = set(s)
    envs: list[Environment] = []
    for a in s:
        for l, e in st.lower[a]:
            if l > t + EPS:
                envs.append(e)
        for u, e in st.upper[a]:
            if u < t - EPS:
                envs.append(e)
        for b, pairs in engine.out_adj[a]:
            if b in st.executed:
                continue
            for w, e in pairs:
                if w < 0:
                    envs.append(e)
    for members, env in st.zero_related:
        if members & sset and any(m not in sset and m not in st.executed for m in members):
            envs.append(env)
    return [e for e in set(envs) if not db.is_conflicted(e)]


def executable(engine: LabeledEngine, s: Sequence[int], t: float) -> tuple[bool, list[Environment]]:
    """Can ``s`` execute at ``t``, and which environments must become conflicts."""
    envs = _violations(engine, s, t)
    if any(e.is_empty for e in envs):
        return False, envs
    envs = minimal_environments(envs)
    if not engine.state.conflicts.some_complete_consistent(extra=envs):
        return False, envs
    return True, envs


def check_missed_upper_bounds(engine: LabeledEngine, t: float) -> tuple[list[str], bool]:
    st = engine.state
    added = []
    for v in range(len(engine.names)):
        if v in st.executed:
            continue
        for u, e in list(st.upper[v]):
            if u < t - EPS and st.conflicts.add_conflict(e):
                added.append(e.render())
    return added, st.conflicts.some_complete_consistent()


def default_horizon(weights: Iterable[float], durations: Iterable[float] = ()) -> float:
    total = sum(abs(w) for w in weights if math.isfinite(w))
    return total + sum(abs(d) for d in durations) + 1.0


def run(
    form: DispatchableForm,
    scenario: Scenario | None = None,
    policy: str | None = None,
    seed: int | None = None,
    tick: float | None = None,
    horizon: float | None = None,
    durations: Mapping[str, float] | None = None,
) -> ExecutionTrace:
    scenario = scenario or Scenario()
    engine = LabeledEngine(form)
    if durations is None:
        durations = scenario.durations(engine.names, seed)
    if horizon is None:
        horizon = default_horizon(
            (w for s in form.graph.weights.values() for w, _ in s), durations.values()
        )
    return run_engine(engine, scenario, policy, seed, tick, horizon, durations)
