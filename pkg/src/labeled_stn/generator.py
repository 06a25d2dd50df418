"""Random structured Labeled STNs.

Every plan is built around hidden reference times: a random tree of
``{}``-labeled constraints (the shared backbone) that the reference times
satisfy, plus extra constraints that are each tied to one choice (or shared,
with probability ``sharing``).  A few choice-specific constraints are shifted
away from the reference times so that some environments become inconsistent.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, replace

from .environments import ChoiceSpace
from .plan import LabeledConstraint, LabeledSTN

__all__ = ["GeneratorParams", "generate", "random_scenario"]


@dataclass(frozen=True)
class GeneratorParams:
    choices: int = 2
    arity: int = 2
    events: int = 6
    ratio: float = 1.5  # constraints per event
    weight_low: int = 1
    weight_high: int = 10
    slack: int = 4
    sharing: float = 0.5
    rigid_prob: float = 0.05
    conflict_prob: float = 0.15
    locality: int = 3  # choice-specific constraints stay this close in the backbone order
    seed: int = 0

    def __post_init__(self):
        if self.events < 2:
            raise ValueError("need at least two events")
        if self.ratio <= 0:
            raise ValueError("ratio must be positive")
        if self.arity < 2 or self.choices < 0:
            raise ValueError("choices need at least two options")
        if not 0.0 <= self.sharing <= 1.0:
            raise ValueError("sharing must lie in [0, 1]")
        if self.weight_low > self.weight_high:
            raise ValueError("empty weight range")


def _interval(rng: random.Random, gap: int, p: GeneratorParams, rigid: bool) -> tuple[int, int]:
    if rigid:
        return gap, gap
    return gap - rng.randint(0, p.slack), gap + rng.randint(0, p.slack)


def generate(params: GeneratorParams, max_retries: int = 50) -> LabeledSTN:
    """Deterministic in ``params.seed``.  Retries until some environment is consistent."""
    from .compiler import Infeasible

    for attempt in range(max_retries):
        seed = params.seed * 1_000_003 + attempt
        plan = _draw(params, random.Random(seed))
        if not isinstance(compile_plan_cheap(plan), Infeasible):
            return plan
    raise RuntimeError(f"no consistent plan after {max_retries} attempts")


def compile_plan_cheap(plan: LabeledSTN):
    """Consistency screen: a single labeled Bellman-Ford from a virtual source."""
    from .compiler import Infeasible, labeled_bellman_ford
    from .environments import ConflictDatabase
    from .plan import to_labeled_distance_graph

    g = to_labeled_distance_graph(plan)
    db = ConflictDatabase(plan.space)
    state = labeled_bellman_ford(g, len(g), db, extra_source_edges=True)
    return state if state.feasible else Infeasible(db)


def _draw(p: GeneratorParams, rng: random.Random) -> LabeledSTN:
    n = p.events
    events = [f"e{i}" for i in range(n)]
    space = ChoiceSpace(
        [(f"x{i + 1}", [str(j + 1) for j in range(p.arity)]) for i in range(p.choices)]
    )
    times = [0] * n
    constraints: list[LabeledConstraint] = []
    for i in range(1, n):
        parent = rng.randrange(max(0, i - p.locality), i)
        times[i] = times[parent] + rng.randint(p.weight_low, p.weight_high)
        lo, hi = _interval(rng, times[i] - times[parent], p, rng.random() < p.rigid_prob)
        constraints.append(LabeledConstraint(events[parent], events[i], lo, hi, space.empty))
    extra = max(0, round(p.ratio * n) - (n - 1))
    for k in range(extra):
        a = rng.randrange(n)
        b = rng.randrange(max(0, a - p.locality), min(n, a + p.locality + 1))
        if a == b:
            b = (a + 1) % n
        gap = times[b] - times[a]
        shared = p.choices == 0 or rng.random() < p.sharing
        if shared:
            env = space.empty
        else:
            nassign = 2 if p.choices >= 2 and rng.random() < 0.25 else 1
            vars_ = rng.sample(range(p.choices), nassign)
            env = space.from_items((v, rng.randrange(p.arity)) for v in sorted(vars_))
        lo, hi = _interval(rng, gap, p, rng.random() < p.rigid_prob)
        if not shared and rng.random() < p.conflict_prob:
            shift = rng.randint(1, p.slack + 2)
            lo, hi = (lo + p.slack + shift, hi + p.slack + shift) if rng.random() < 0.5 else (
                lo - p.slack - shift,
                hi - p.slack - shift,
            )
        constraints.append(LabeledConstraint(events[a], events[b], lo, hi, env))
    return LabeledSTN(events, space, constraints)


def with_seed(params: GeneratorParams, seed: int) -> GeneratorParams:
    return replace(params, seed=seed)


def random_scenario(
    plan: LabeledSTN,
    seed: int,
    policy: str = "earliest",
    activity_prob: float = 0.3,
    spread: int = 6,
) -> "Scenario":
    """Mark some events as activity ends driven by their backbone parent.

    Durations are uniform around the parent-to-child gap, so some draws fall
    outside the plan's bounds and exercise failure handling.
    """
    from .dispatcher import ActivityEnd, Scenario

    rng = random.Random(seed)
    parents: dict[str, LabeledConstraint] = {}
    order = {e: i for i, e in enumerate(plan.events)}
    for c in plan.constraints:
        if c.env.is_empty and order[c.source] < order[c.target] and c.target not in parents:
            parents[c.target] = c
    sc = Scenario(seed=seed, policy=policy)
    for e in plan.events:
        c = parents.get(e)
        if c is not None and rng.random() < activity_prob:
            mid = (c.lower + c.upper) / 2
            lo = max(0, int(mid) - spread // 2)
            sc.activities[e] = ActivityEnd(c.source, float(lo), float(lo + spread))
        else:
            sc.controlled.append(e)
    return sc
