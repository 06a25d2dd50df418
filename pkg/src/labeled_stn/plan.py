"""Labeled STN / DTN models, their text formats, and the labeled distance graph.

A constraint ``A B [l, u] if env`` means ``l <= B - A <= u`` whenever the
environment holds.  In the distance graph this becomes ``W(A, B) = u`` and
``W(B, A) = -l``, so every edge weight bounds ``to - from`` from above.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

from .environments import ChoiceSpace, ConflictDatabase, Environment
from .lvs import LabeledValueSet, Ordering, format_number

__all__ = [
    "DTN",
    "LabeledConstraint",
    "LabeledDistanceGraph",
    "LabeledSTN",
    "PlanSyntaxError",
    "SimpleConstraint",
    "import_dtn",
    "parse_dtn",
    "parse_plan",
    "render_dtn",
    "render_plan",
    "rover_plan",
    "ROVER_PLAN_TEXT",
    "to_labeled_distance_graph",
]

INF = math.inf


class PlanSyntaxError(ValueError):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        self.line = line
        self.col = col
        loc = f"line {line}, column {col}: " if line else ""
        super().__init__(loc + message)


@dataclass(frozen=True)
class LabeledConstraint:
    source: str
    target: str
    lower: float
    upper: float
    env: Environment

    def holds(self, schedule: Mapping[str, float], eps: float = 1e-9) -> bool:
        diff = schedule[self.target] - schedule[self.source]
        return self.lower - eps <= diff <= self.upper + eps


@dataclass
class LabeledSTN:
    events: list[str]
    space: ChoiceSpace
    constraints: list[LabeledConstraint] = field(default_factory=list)

    def __post_init__(self):
        if len(set(self.events)) != len(self.events):
            raise ValueError("duplicate event names")
        known = set(self.events)
        for c in self.constraints:
            for ev in (c.source, c.target):
                if ev not in known:
                    raise ValueError(f"constraint references undeclared event {ev!r}")
            if c.env.space is not self.space:
                raise ValueError("constraint environment is over a different choice space")

    @property
    def variables(self) -> list[tuple[str, tuple[str, ...]]]:
        return list(zip(self.space.names, self.space.domains))

    def __eq__(self, other) -> bool:
        if not isinstance(other, LabeledSTN):
            return NotImplemented
        if self.events != other.events or not self.space.same_as(other.space):
            return False
        mine = [(c.source, c.target, c.lower, c.upper, c.env.items) for c in self.constraints]
        theirs = [(c.source, c.target, c.lower, c.upper, c.env.items) for c in other.constraints]
        return mine == theirs


@dataclass(frozen=True)
class SimpleConstraint:
    source: str
    target: str
    lower: float
    upper: float


@dataclass
class DTN:
    events: list[str]
    disjunctions: list[list[SimpleConstraint]] = field(default_factory=list)

    def __post_init__(self):
        for d in self.disjunctions:
            if not d:
                raise ValueError("empty disjunctive constraint")


class LabeledDistanceGraph:
    """Vertices ``0..n-1`` with labeled (MIN-ordered) edge weights."""

    def __init__(self, names: Sequence[str], space: ChoiceSpace):
        self.names: list[str] = list(names)
        self.space = space
        self.index = {n: i for i, n in enumerate(self.names)}
        self.weights: dict[tuple[int, int], LabeledValueSet] = {}

    def __len__(self) -> int:
        return len(self.names)

    @property
    def vertices(self) -> range:
        return range(len(self.names))

    def vid(self, v) -> int:
        return self.index[v] if isinstance(v, str) else v

    def add(self, u, v, value: float, env: Environment, db: ConflictDatabase | None = None) -> bool:
        if not math.isfinite(value) and value > 0:
            return False
        key = (self.vid(u), self.vid(v))
        s = self.weights.get(key)
        if s is None:
            s = self.weights[key] = LabeledValueSet()
        changed = s.insert(value, env, db)
        if not s:
            del self.weights[key]
        return changed

    def weight(self, u, v) -> LabeledValueSet:
        """The weight set for (u, v); an empty set if absent (not stored)."""
        return self.weights.get((self.vid(u), self.vid(v)), LabeledValueSet())

    def set_weight(self, u, v, lvs: LabeledValueSet) -> None:
        key = (self.vid(u), self.vid(v))
        if lvs:
            self.weights[key] = lvs
        else:
            self.weights.pop(key, None)

    def edges(self) -> Iterator[tuple[int, int, LabeledValueSet]]:
        for (u, v), s in sorted(self.weights.items()):
            yield u, v, s

    def pair_count(self) -> int:
        return sum(len(s) for s in self.weights.values())

    def copy(self) -> LabeledDistanceGraph:
        g = LabeledDistanceGraph(self.names, self.space)
        g.weights = {k: s.copy() for k, s in self.weights.items()}
        return g

    def purge(self, db: ConflictDatabase) -> None:
        for key in list(self.weights):
            s = self.weights[key]
            s.purge(db)
            if not s:
                del self.weights[key]

    def project(self, env: Environment) -> dict[tuple[int, int], float]:
        """Unlabeled weights under a (complete) environment."""
        out = {}
        for key, s in self.weights.items():
            b = s.best(env)
            if b is not None and math.isfinite(b):
                out[key] = b
        return out

    def __repr__(self) -> str:
        lines = [
            f"{self.names[u]}->{self.names[v]}: {s.render()}" for u, v, s in self.edges()
        ]
        return "LabeledDistanceGraph(" + "; ".join(lines) + ")"


def to_labeled_distance_graph(plan: LabeledSTN) -> LabeledDistanceGraph:
    g = LabeledDistanceGraph(plan.events, plan.space)
    for c in plan.constraints:
        if math.isfinite(c.upper):
            g.add(c.source, c.target, c.upper, c.env)
        if math.isfinite(c.lower):
            g.add(c.target, c.source, -c.lower, c.env)
    return g


def import_dtn(d: DTN) -> LabeledSTN:
    """Give every multi-disjunct constraint a fresh variable ``x<i>`` with options 1..n."""
    variables = []
    for d_list in d.disjunctions:
        if len(d_list) > 1:
            name = f"x{len(variables) + 1}"
            variables.append((name, [str(j + 1) for j in range(len(d_list))]))
    space = ChoiceSpace(variables)
    constraints = []
    k = 0
    for d_list in d.disjunctions:
        if len(d_list) == 1:
            c = d_list[0]
            constraints.append(LabeledConstraint(c.source, c.target, c.lower, c.upper, space.empty))
            continue
        for j, c in enumerate(d_list):
            env = space.from_items([(k, j)])
            constraints.append(LabeledConstraint(c.source, c.target, c.lower, c.upper, env))
        k += 1
    return LabeledSTN(list(d.events), space, constraints)


# -- text formats ------------------------------------------------------------

_NAME = r"[A-Za-z_][A-Za-z0-9_.\-]*"
_NUM = r"[-+]?(?:inf|\d+(?:\.\d*)?(?:[eE][-+]?\d+)?|\.\d+(?:[eE][-+]?\d+)?)"
_VAR_RE = re.compile(rf"var\s+({_NAME})\s*\{{\s*(.*?)\s*\}}\s*$")
_EVENT_RE = re.compile(rf"event\s+({_NAME})\s*$")
_CONS_RE = re.compile(
    rf"constraint\s+({_NAME})\s+({_NAME})\s*\[\s*({_NUM})\s*,\s*({_NUM})\s*\]\s*(?:if\s+(.*?))?\s*$"
)
_ASSIGN_RE = re.compile(rf"\s*({_NAME})\s*=\s*([A-Za-z0-9_.\-]+)\s*$")
_OPT_RE = re.compile(r"[A-Za-z0-9_.\-]+$")
_DISJUNCT_RE = re.compile(
    rf"\(\s*({_NAME})\s+({_NAME})\s*\[\s*({_NUM})\s*,\s*({_NUM})\s*\]\s*\)"
)


def _strip(line: str) -> str:
    i = line.find("#")
    return (line if i < 0 else line[:i]).rstrip()


def _col(raw: str) -> int:
    return len(raw) - len(raw.lstrip()) + 1


def _number(text: str) -> float:
    return float(text)


def parse_plan(text: str) -> LabeledSTN:
    """Parse the line-oriented plan format.  Errors carry line and column."""
    variables: list[tuple[str, list[str]]] = []
    events: list[str] = []
    pending: list[tuple[int, int, str, str, float, float, str | None]] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = _strip(raw).strip()
        if not line:
            continue
        col = _col(raw)
        keyword = line.split(None, 1)[0]
        if keyword == "var":
            m = _VAR_RE.match(line)
            if not m:
                raise PlanSyntaxError("malformed variable declaration", lineno, col)
            opts = [o.strip() for o in m.group(2).split(",")] if m.group(2).strip() else []
            if not opts or not all(_OPT_RE.match(o) for o in opts):
                raise PlanSyntaxError("malformed option list", lineno, col)
            if any(v == m.group(1) for v, _ in variables):
                raise PlanSyntaxError(f"duplicate variable {m.group(1)!r}", lineno, col)
            variables.append((m.group(1), opts))
        elif keyword == "event":
            m = _EVENT_RE.match(line)
            if not m:
                raise PlanSyntaxError("malformed event declaration", lineno, col)
            if m.group(1) in events:
                raise PlanSyntaxError(f"duplicate event {m.group(1)!r}", lineno, col)
            events.append(m.group(1))
        elif keyword == "constraint":
            m = _CONS_RE.match(line)
            if not m:
                raise PlanSyntaxError("malformed constraint", lineno, col)
            a, b, lo, hi, cond = m.groups()
            pending.append((lineno, col, a, b, _number(lo), _number(hi), cond))
        else:
            raise PlanSyntaxError(f"unknown keyword {keyword!r}", lineno, col)
    try:
        space = ChoiceSpace(variables)
    except ValueError as exc:
        raise PlanSyntaxError(str(exc)) from None
    known = set(events)
    constraints = []
    for lineno, col, a, b, lo, hi, cond in pending:
        for ev in (a, b):
            if ev not in known:
                raise PlanSyntaxError(f"undeclared event {ev!r}", lineno, col)
        items = []
        if cond is not None:
            for part in cond.split(","):
                am = _ASSIGN_RE.match(part)
                if not am:
                    raise PlanSyntaxError("malformed environment", lineno, col)
                items.append((am.group(1), am.group(2)))
        try:
            env = space.env(items)
        except ValueError as exc:
            raise PlanSyntaxError(str(exc), lineno, col) from None
        if lo == INF or hi == -INF:
            raise PlanSyntaxError("bound out of range", lineno, col)
        constraints.append(LabeledConstraint(a, b, lo, hi, env))
    return LabeledSTN(events, space, constraints)


def _render_env_clause(env: Environment) -> str:
    if env.is_empty:
        return ""
    sp = env.space
    return " if " + ", ".join(f"{sp.names[v]}={sp.domains[v][o]}" for v, o in env.items)


def render_plan(plan: LabeledSTN) -> str:
    lines = []
    for name, dom in plan.variables:
        lines.append(f"var {name} {{ {', '.join(dom)} }}")
    for ev in plan.events:
        lines.append(f"event {ev}")
    for c in plan.constraints:
        lines.append(
            f"constraint {c.source} {c.target} [{format_number(c.lower)}, {format_number(c.upper)}]"
            + _render_env_clause(c.env)
        )
    return "\n".join(lines) + ("\n" if lines else "")


def parse_dtn(text: str) -> DTN:
    events: list[str] = []
    disjunctions: list[list[SimpleConstraint]] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = _strip(raw).strip()
        if not line:
            continue
        col = _col(raw)
        keyword = line.split(None, 1)[0]
        if keyword == "event":
            m = _EVENT_RE.match(line)
            if not m:
                raise PlanSyntaxError("malformed event declaration", lineno, col)
            if m.group(1) in events:
                raise PlanSyntaxError(f"duplicate event {m.group(1)!r}", lineno, col)
            events.append(m.group(1))
        elif keyword == "disj":
            body = line[len("disj"):].strip()
            parts = [p.strip() for p in body.split("|")]
            d_list = []
            for p in parts:
                m = _DISJUNCT_RE.fullmatch(p)
                if not m:
                    raise PlanSyntaxError("malformed disjunct", lineno, col)
                a, b, lo, hi = m.groups()
                for ev in (a, b):
                    if ev not in events:
                        raise PlanSyntaxError(f"undeclared event {ev!r}", lineno, col)
                d_list.append(SimpleConstraint(a, b, _number(lo), _number(hi)))
            disjunctions.append(d_list)
        else:
            raise PlanSyntaxError(f"unknown keyword {keyword!r}", lineno, col)
    return DTN(events, disjunctions)


def render_dtn(d: DTN) -> str:
    lines = [f"event {e}" for e in d.events]
    for d_list in d.disjunctions:
        lines.append(
            "disj "
            + " | ".join(
                f"({c.source} {c.target} [{format_number(c.lower)},{format_number(c.upper)}])"
                for c in d_list
            )
        )
    return "\n".join(lines) + ("\n" if lines else "")


def rover_plan() -> LabeledSTN:
    """The drive / collect-or-charge rover plan used across tests and demos."""
    return parse_plan(ROVER_PLAN_TEXT)


ROVER_PLAN_TEXT = """\
# rover: drive, then collect samples or charge, all within 100 minutes
var x { collect, charge }
event A
event B
event C
event D
event E
event F
constraint A F [0, 100]
constraint A B [30, 70]
constraint E F [0, 0]
constraint B C [50, 60] if x=collect
constraint C E [0, 0] if x=collect
constraint B D [0, 50] if x=charge
constraint D E [0, 0] if x=charge
"""
