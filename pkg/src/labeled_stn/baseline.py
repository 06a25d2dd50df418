"""Enumeration baseline: one classical STN per complete environment.

Everything here works on plain numpy distance matrices built straight from
the plan's constraints, so it shares no shortest-path or pruning code with
the labeled compiler and can serve as its oracle.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .environments import CapacityError, ChoiceSpace, Environment
from .dispatcher import Scenario, default_horizon, run_engine, ExecutionTrace
from .lvs import EPS
from .plan import LabeledSTN

__all__ = [
    "ComponentSTN",
    "DispatchableSTN",
    "ParallelEngine",
    "all_pairs",
    "compile_components",
    "consistent_components",
    "dead_end",
    "enumerate_component_stns",
    "parallel_dispatch",
    "stn_compile",
    "stn_dispatch",
    "verify_schedule",
]

INF = math.inf
DEFAULT_CAP = 4096


def _complete_envs(space: ChoiceSpace, cap: int):
    if space.complete_count() > cap:
        raise CapacityError(f"{space.complete_count()} component STNs exceed the cap of {cap}")
    for combo in itertools.product(*(range(len(d)) for d in space.domains)):
        yield space.from_items(enumerate(combo))


def _entailed(c_env: Environment, env: Environment) -> bool:
    # constraint holds iff every assignment of its label appears in env
    return all(env.option_of(v) == o for v, o in c_env.items)


@dataclass
class ComponentSTN:
    env: Environment
    events: list[str]
    weights: np.ndarray  # weights[i, j] bounds t_j - t_i from above
    consistent: bool = True

    @property
    def n(self) -> int:
        return len(self.events)


def enumerate_component_stns(plan: LabeledSTN, cap: int = DEFAULT_CAP) -> list[ComponentSTN]:
    idx = {e: i for i, e in enumerate(plan.events)}
    n = len(plan.events)
    out = []
    for env in _complete_envs(plan.space, cap):
        w = np.full((n, n), INF)
        np.fill_diagonal(w, 0.0)
        for c in plan.constraints:
            if not _entailed(c.env, env):
                continue
            a, b = idx[c.source], idx[c.target]
            if a == b:
                if c.lower > 0 or c.upper < 0:
                    w[a, a] = -1.0
                continue
            w[a, b] = min(w[a, b], c.upper)
            w[b, a] = min(w[b, a], -c.lower)
        comp = ComponentSTN(env, list(plan.events), w)
        comp.consistent = bool(np.all(np.diag(all_pairs(w)) >= -EPS)) if n else True
        out.append(comp)
    return out


def consistent_components(plan: LabeledSTN, cap: int = DEFAULT_CAP) -> list[ComponentSTN]:
    return [c for c in enumerate_component_stns(plan, cap) if c.consistent]


def all_pairs(w: np.ndarray) -> np.ndarray:
    """Floyd-Warshall on a dense matrix; inf marks a missing edge."""
    d = np.array(w, dtype=float, copy=True)
    n = d.shape[0]
    for k in range(n):
        np.minimum(d, d[:, k : k + 1] + d[k : k + 1, :], out=d)
    return d


@dataclass
class DispatchableSTN:
    env: Environment | None
    events: list[str]
    edges: dict[tuple[int, int], float]
    groups: list[frozenset[int]] = field(default_factory=list)
    leaders: dict[int, int] = field(default_factory=dict)


def stn_compile(c: ComponentSTN) -> DispatchableSTN | None:
    """APSP, rigid-class contraction and triangle pruning; None if inconsistent."""
    n = c.n
    d = all_pairs(c.weights)
    if n and np.any(np.diag(d) < -EPS):
        return None
    # rigid classes: d(i, j) + d(j, i) == 0
    leader_of: dict[int, int] = {}
    classes: list[list[int]] = []
    for i in range(n):
        if i in leader_of:
            continue
        cls = [j for j in range(n) if j not in leader_of and abs(d[i, j] + d[j, i]) <= EPS]
        # t_j - t_i = d[i, j] inside a rigid class; the leader occurs first
        leader = min(cls, key=lambda j: (d[i, j] if j != i else 0.0, j))
        for j in cls:
            leader_of[j] = leader
        classes.append(cls)
    edges: dict[tuple[int, int], float] = {}
    groups: list[frozenset[int]] = []
    for cls in classes:
        if len(cls) < 2:
            continue
        lead = leader_of[cls[0]]
        by_off: dict[float, set[int]] = {}
        for j in cls:
            off = 0.0 if j == lead else float(d[lead, j])
            by_off.setdefault(off, set()).add(j)
            if j != lead:
                edges[(lead, j)] = off
                edges[(j, lead)] = 0.0 - off
        groups.extend(frozenset(s) for _, s in sorted(by_off.items()) if len(s) >= 2)
    leaders = sorted(set(leader_of.values()))
    for a in leaders:
        for cc in leaders:
            if a == cc or not math.isfinite(d[a, cc]):
                continue
            w_ac = d[a, cc]
            dominated = False
            for b in leaders:
                if b in (a, cc):
                    continue
                if abs(d[a, b] + d[b, cc] - w_ac) > EPS:
                    continue
                if w_ac >= 0 and d[b, cc] >= 0:
                    dominated = True
                    break
                if w_ac < 0 and d[a, b] < 0:
                    dominated = True
                    break
            if not dominated:
                edges[(a, cc)] = float(w_ac)
    return DispatchableSTN(c.env, list(c.events), edges, groups, leader_of)


# -- parallel dispatch ---------------------------------------------------------------


class _Component:
    def __init__(self, g: DispatchableSTN):
        self.g = g
        n = len(g.events)
        self.out_adj: list[list[tuple[int, float]]] = [[] for _ in range(n)]
        self.in_adj: list[list[tuple[int, float]]] = [[] for _ in range(n)]
        for (u, v), w in sorted(g.edges.items()):
            self.out_adj[u].append((v, w))
            self.in_adj[v].append((u, w))
        self.upper = [INF] * n
        self.lower = [-INF] * n
        self.alive = True

    def accepts(self, s, t, executed) -> bool:
        sset = set(s)
        for a in s:
            if self.lower[a] > t + EPS or self.upper[a] < t - EPS:
                return False
            for b, w in self.out_adj[a]:
                if w < 0 and b not in executed:
                    return False
        for z in self.g.groups:
            if z & sset and any(m not in sset and m not in executed for m in z):
                return False
        return True

    def propagate(self, a, t, executed) -> None:
        for b, w in self.out_adj[a]:
            if b not in executed:
                self.upper[b] = min(self.upper[b], t + w)
        for b, w in self.in_adj[a]:
            if b not in executed:
                self.lower[b] = max(self.lower[b], t - w)


class ParallelEngine:
    """Dispatch every consistent component in lockstep; drop the ones a decision violates."""

    def __init__(self, compiled: Sequence[DispatchableSTN], events: Sequence[str]):
        self.names = list(events)
        self.components = [_Component(g) for g in compiled]
        self.executed: dict[int, float] = {}

    def _alive(self):
        return [c for c in self.components if c.alive]

    def unexecuted(self) -> list[int]:
        return [v for v in range(len(self.names)) if v not in self.executed]

    def executed_times(self) -> dict[int, float]:
        return self.executed

    def candidates(self) -> list[tuple[int, ...]]:
        singles = [(v,) for v in self.unexecuted()]
        seen = set(singles)
        groups = set()
        for c in self._alive():
            for z in c.g.groups:
                rest = tuple(sorted(m for m in z if m not in self.executed))
                if rest and rest not in seen:
                    groups.add(rest)
        return singles + sorted(groups)

    def assess(self, s, t):
        alive = self._alive()
        rejecting = [c for c in alive if not c.accepts(s, t, self.executed)]
        if len(rejecting) == len(alive):
            return None
        return rejecting

    def is_free(self, token) -> bool:
        return not token

    def commit(self, s, t, token) -> list[str]:
        for c in token:
            c.alive = False
        for v in s:
            self.executed[v] = t
        for c in self._alive():
            for v in s:
                c.propagate(v, t, self.executed)
        return [f"drop {c.g.env.render() if c.g.env is not None else '{}'}" for c in token]

    def force(self, s, t):
        alive = self._alive()
        rejecting = [c for c in alive if not c.accepts(s, t, self.executed)]
        notes = self.commit(s, t, rejecting)
        return notes, bool(self._alive())

    def check_missed(self, t):
        notes = []
        for c in self._alive():
            if any(c.upper[v] < t - EPS for v in self.unexecuted()):
                c.alive = False
                notes.append(f"drop {c.g.env.render() if c.g.env is not None else '{}'}")
        return notes, bool(self._alive())

    def due(self, s, t, tick) -> bool:
        finite = False
        for c in self._alive():
            for v in s:
                u = c.upper[v]
                if math.isfinite(u):
                    finite = True
                    if u < t + tick - EPS:
                        return True
        return not finite


def compile_components(plan: LabeledSTN, cap: int = DEFAULT_CAP) -> list[DispatchableSTN]:
    out = []
    for comp in enumerate_component_stns(plan, cap):
        if not comp.consistent:
            continue
        g = stn_compile(comp)
        if g is not None:
            out.append(g)
    return out


def parallel_dispatch(
    compiled: Sequence[DispatchableSTN],
    events: Sequence[str],
    scenario: Scenario | None = None,
    policy: str | None = None,
    seed: int | None = None,
    tick: float | None = None,
    horizon: float | None = None,
    durations: Mapping[str, float] | None = None,
) -> ExecutionTrace:
    scenario = scenario or Scenario()
    engine = ParallelEngine(compiled, events)
    if durations is None:
        durations = scenario.durations(list(events), seed)
    if horizon is None:
        horizon = default_horizon(
            (w for g in compiled for w in g.edges.values()), durations.values()
        )
    if not compiled:
        return ExecutionTrace([], False, {}, 0.0, 0, 0, list(events))
    return run_engine(engine, scenario, policy, seed, tick, horizon, durations)


def stn_dispatch(g: DispatchableSTN, scenario: Scenario | None = None, **kwargs) -> ExecutionTrace:
    return parallel_dispatch([g], g.events, scenario, **kwargs)


# -- brute-force checkers ------------------------------------------------------------


def verify_schedule(plan: LabeledSTN, schedule: Mapping[str, float], eps: float = 1e-9) -> list[Environment]:
    """Complete environments under which every entailed constraint holds."""
    out = []
    for env in _complete_envs(plan.space, 1 << 30):
        ok = True
        for c in plan.constraints:
            if _entailed(c.env, env) and not c.holds(schedule, eps):
                ok = False
                break
        if ok:
            out.append(env)
    return out


def dead_end(
    plan: LabeledSTN,
    executed: Mapping[str, float],
    t: float,
    cap: int = DEFAULT_CAP,
    activities: Mapping[str, tuple[str, float]] | None = None,
) -> bool:
    """True iff no complete environment admits a schedule extending ``executed``
    with every remaining event at or after ``t``.

    ``activities`` maps an event to ``(driver, duration)``: the realized world,
    in which that event happens exactly ``duration`` after its driver.
    """
    n = len(plan.events)
    z = n  # reference point at time 0
    idx = {e: i for i, e in enumerate(plan.events)}
    pinned = [(idx[d], idx[e], x) for e, (d, x) in (activities or {}).items() if e in idx and d in idx]
    for comp in enumerate_component_stns(plan, cap):
        w = np.full((n + 1, n + 1), INF)
        w[:n, :n] = comp.weights
        w[z, z] = 0.0
        for e, i in idx.items():
            if e in executed:
                w[z, i] = min(w[z, i], executed[e])
                w[i, z] = min(w[i, z], -executed[e])
            else:
                w[i, z] = min(w[i, z], -t)
        for a, b, x in pinned:
            w[a, b] = min(w[a, b], x)
            w[b, a] = min(w[b, a], -x)
        d = all_pairs(w)
        if np.all(np.diag(d) >= -EPS):
            return False
    return True
