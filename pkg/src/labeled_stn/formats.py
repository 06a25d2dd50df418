"""Canonical text serializations of compiled forms.

Both pipelines share one header (variables, then events) so that byte
counts compare the compiled content and nothing else.  Labeled form::

    var x { collect, charge }
    event A
    ...
    edge A B {(50, {x=collect}), (70, {})}
    edge A F 100
    zgroup {C, E, F} if {x=collect}
    conflict {x=charge}

Enumeration form repeats a ``component <env>`` section per consistent
component STN, with plain numbers for weights::

    component {x=collect}
    edge A B 60
    zgroup {C, E, F}
"""

from __future__ import annotations

import math
import re
from typing import Sequence

from .baseline import DispatchableSTN
from .compiler import DispatchableForm
from .environments import ChoiceSpace, ConflictDatabase, Environment
from .lvs import format_number
from .plan import LabeledDistanceGraph, PlanSyntaxError

__all__ = [
    "compiled_size",
    "parse_compiled",
    "parse_enumeration",
    "read_any",
    "render_compiled",
    "render_enumeration",
]


def _header(space: ChoiceSpace, events: Sequence[str]) -> list[str]:
    lines = [f"var {n} {{ {', '.join(dom)} }}" for n, dom in zip(space.names, space.domains)]
    lines.extend(f"event {e}" for e in events)
    return lines


def _members(names: Sequence[str], ids) -> str:
    return "{" + ", ".join(sorted(names[i] for i in ids)) + "}"


def render_compiled(form: DispatchableForm) -> str:
    g = form.graph
    names = g.names
    lines = _header(form.space, names)
    for (u, v), lvs in sorted(g.weights.items(), key=lambda kv: (names[kv[0][0]], names[kv[0][1]])):
        body = lvs.render()
        if body == "{}":
            continue
        only = list(lvs)
        if len(only) == 1 and only[0][1].is_empty:
            # a lone unconditional weight is written bare, as in the enumeration form
            body = format_number(only[0][0] + 0.0)
        lines.append(f"edge {names[u]} {names[v]} {body}")
    zs = sorted((_members(names, m), e.render()) for m, e in form.zero_related)
    lines.extend(f"zgroup {m}" if e == "{}" else f"zgroup {m} if {e}" for m, e in zs)
    conflicts = sorted(form.conflicts, key=Environment.sort_key)
    lines.extend(f"conflict {c.render()}" for c in conflicts)
    return "\n".join(lines) + "\n"


def render_enumeration(
    compiled: Sequence[DispatchableSTN], space: ChoiceSpace, events: Sequence[str]
) -> str:
    lines = _header(space, events)
    for g in compiled:
        env = g.env.render() if g.env is not None else "{}"
        lines.append(f"component {env}")
        for (u, v), w in sorted(g.edges.items(), key=lambda kv: (events[kv[0][0]], events[kv[0][1]])):
            lines.append(f"edge {events[u]} {events[v]} {format_number(w + 0.0)}")
        for z in sorted(_members(events, z) for z in g.groups):
            lines.append(f"zgroup {z}")
    return "\n".join(lines) + "\n"


def compiled_size(text: str) -> int:
    """The size metric: UTF-8 byte length of a canonical serialization."""
    return len(text.encode("utf-8"))


# -- parsing ------------------------------------------------------------------------

_VAR = re.compile(r"var\s+(\S+)\s*\{([^}]*)\}\s*$")
_EVENT = re.compile(r"event\s+(\S+)\s*$")
_EDGE = re.compile(r"edge\s+(\S+)\s+(\S+)\s+(.+)$")
_ZGROUP = re.compile(r"zgroup\s+\{([^}]*)\}(?:\s+if\s+(\{[^}]*\}))?\s*$")
_CONFLICT = re.compile(r"conflict\s+(\{[^}]*\})\s*$")
_COMPONENT = re.compile(r"component\s+(\{[^}]*\})\s*$")
_BARE = re.compile(r"-?inf$|[-+0-9.eE]+$")
_PAIR = re.compile(r"\(\s*(-?inf|[-+0-9.eE]+)\s*,\s*(\{[^}]*\})\s*\)")


def _env(space: ChoiceSpace, text: str) -> Environment:
    inner = text.strip()[1:-1].strip()
    if not inner:
        return space.empty
    items = []
    for part in inner.split(","):
        name, _, opt = part.strip().partition("=")
        items.append((name.strip(), opt.strip()))
    return space.env(items)


def _num(text: str) -> float:
    return float(text)  # float() accepts "inf" and "-inf"


class _Reader:
    def __init__(self, text: str):
        self.variables: list[tuple[str, list[str]]] = []
        self.events: list[str] = []
        self.body: list[tuple[int, str]] = []
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if line.startswith("var "):
                m = _VAR.match(line)
                if not m:
                    raise PlanSyntaxError("malformed variable declaration", lineno, 1)
                self.variables.append((m.group(1), [o.strip() for o in m.group(2).split(",")]))
            elif line.startswith("event "):
                m = _EVENT.match(line)
                if not m:
                    raise PlanSyntaxError("malformed event declaration", lineno, 1)
                self.events.append(m.group(1))
            else:
                self.body.append((lineno, line))
        self.space = ChoiceSpace(self.variables)
        self.index = {e: i for i, e in enumerate(self.events)}

    def vid(self, name: str, lineno: int) -> int:
        try:
            return self.index[name]
        except KeyError:
            raise PlanSyntaxError(f"undeclared event {name!r}", lineno, 1) from None

    def group(self, text: str, lineno: int) -> frozenset[int]:
        return frozenset(self.vid(n.strip(), lineno) for n in text.split(",") if n.strip())


def parse_compiled(text: str) -> DispatchableForm:
    r = _Reader(text)
    space = r.space
    g = LabeledDistanceGraph(r.events, space)
    db = ConflictDatabase(space)
    groups: list[tuple[frozenset[int], Environment]] = []
    for lineno, line in r.body:
        try:
            if line.startswith("edge "):
                m = _EDGE.match(line)
                if not m:
                    raise ValueError("malformed edge")
                u, v = r.vid(m.group(1), lineno), r.vid(m.group(2), lineno)
                body = m.group(3).strip()
                if _BARE.match(body):
                    g.add(u, v, _num(body), space.empty)
                    continue
                pairs = _PAIR.findall(body)
                if not pairs and body != "{}":
                    raise ValueError("malformed labeled value set")
                for num, env in pairs:
                    g.add(u, v, _num(num), _env(space, env))
            elif line.startswith("zgroup "):
                m = _ZGROUP.match(line)
                if not m:
                    raise ValueError("malformed zgroup")
                env = _env(space, m.group(2)) if m.group(2) else space.empty
                groups.append((r.group(m.group(1), lineno), env))
            elif line.startswith("conflict "):
                m = _CONFLICT.match(line)
                if not m:
                    raise ValueError("malformed conflict")
                db.add_conflict(_env(space, m.group(1)))
            else:
                raise ValueError(f"unexpected line {line.split()[0]!r}")
        except ValueError as exc:
            if isinstance(exc, PlanSyntaxError):
                raise
            raise PlanSyntaxError(str(exc), lineno, 1) from None
    return DispatchableForm(g, groups, db, space, [])


def parse_enumeration(text: str) -> tuple[list[DispatchableSTN], ChoiceSpace, list[str]]:
    r = _Reader(text)
    out: list[DispatchableSTN] = []
    for lineno, line in r.body:
        try:
            if line.startswith("component "):
                m = _COMPONENT.match(line)
                if not m:
                    raise ValueError("malformed component header")
                out.append(DispatchableSTN(_env(r.space, m.group(1)), list(r.events), {}))
                continue
            if not out:
                raise ValueError("content before the first component")
            cur = out[-1]
            if line.startswith("edge "):
                m = _EDGE.match(line)
                if not m:
                    raise ValueError("malformed edge")
                w = _num(m.group(3))
                if math.isnan(w):
                    raise ValueError("weight is not a number")
                cur.edges[(r.vid(m.group(1), lineno), r.vid(m.group(2), lineno))] = w
            elif line.startswith("zgroup "):
                m = _ZGROUP.match(line)
                if not m:
                    raise ValueError("malformed zgroup")
                cur.groups.append(r.group(m.group(1), lineno))
            else:
                raise ValueError(f"unexpected line {line.split()[0]!r}")
        except ValueError as exc:
            if isinstance(exc, PlanSyntaxError):
                raise
            raise PlanSyntaxError(str(exc), lineno, 1) from None
    return out, r.space, list(r.events)


def read_any(text: str):
    """Parse either serialization; enumeration files are told apart by their sections."""
    if any(line.strip().startswith("component ") for line in text.splitlines()):
        return parse_enumeration(text)
    return parse_compiled(text)
