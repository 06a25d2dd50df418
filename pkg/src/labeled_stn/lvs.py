"""Labeled value sets: minimal collections of (value, environment) pairs.

A value is either a real number or a ``(real, vertex)`` pair used for
predecessor bookkeeping.  Predecessor pairs compare by their real part only,
and two distinct pairs with the same real are incomparable.
"""

from __future__ import annotations

import enum
import math
from typing import Callable, Iterable, Iterator, NamedTuple

from .environments import BOTTOM, ConflictDatabase, Environment, union

__all__ = [
    "EPS",
    "LabeledValue",
    "LabeledValueSet",
    "apply",
    "Ordering",
    "dominates",
    "format_number",
    "real",
    "value_le",
]

EPS = 1e-9
INF = math.inf


class Ordering(enum.Enum):
    MIN = "min"
    MAX = "max"


class LabeledValue(NamedTuple):
    value: object
    env: Environment


def real(v) -> float:
    return v[0] if isinstance(v, tuple) else v


def value_le(a, b, ordering: Ordering = Ordering.MIN) -> bool:
    """``a`` is at least as good as ``b`` under the ordering."""
    if a == b:
        return True
    if ordering is Ordering.MIN:
        return real(a) < real(b)
    return real(a) > real(b)


def dominates(p, q, ordering: Ordering = Ordering.MIN) -> bool:
    pv, pe = p
    qv, qe = q
    return value_le(pv, qv, ordering) and pe.mask & qe.mask == pe.mask


def format_number(x: float) -> str:
    if x == INF:
        return "inf"
    if x == -INF:
        return "-inf"
    if float(x).is_integer():
        return str(int(x))
    return repr(float(x))


def _format_value(v) -> str:
    if isinstance(v, tuple):
        r, vert = v
        return f"({format_number(r)}, {'NIL' if vert is None else vert})"
    return format_number(v)


class LabeledValueSet:
    """Dominance-minimal set of labeled values, kept sorted best-first."""

    __slots__ = ("ordering", "_pairs")

    def __init__(
        self,
        pairs: Iterable[tuple] = (),
        ordering: Ordering = Ordering.MIN,
        db: ConflictDatabase | None = None,
    ):
        self.ordering = ordering
        self._pairs: list[LabeledValue] = []
        for v, e in pairs:
            self.insert(v, e, db)

    # sorting key: best real first
    def _key(self, v) -> float:
        r = real(v)
        return r if self.ordering is Ordering.MIN else -r

    def __len__(self) -> int:
        return len(self._pairs)

    def __iter__(self) -> Iterator[LabeledValue]:
        return iter(self._pairs)

    def __bool__(self) -> bool:
        return bool(self._pairs)

    def __eq__(self, other) -> bool:
        if not isinstance(other, LabeledValueSet):
            return NotImplemented
        return self.ordering is other.ordering and set(self._pairs) == set(other._pairs)

    def __repr__(self) -> str:
        return self.render(keep_infinite=True)

    @property
    def pairs(self) -> list[LabeledValue]:
        return list(self._pairs)

    def copy(self) -> LabeledValueSet:
        out = LabeledValueSet(ordering=self.ordering)
        out._pairs = list(self._pairs)
        return out

    def insert(self, value, env, db: ConflictDatabase | None = None) -> bool:
        """Add ``(value, env)`` unless dominated.  Returns True if the set changed."""
        if env is BOTTOM:
            return False
        if db is not None and db.is_conflicted(env):
            return False
        emask = env.mask
        minimize = self.ordering is Ordering.MIN
        r = real(value)
        pairs = self._pairs
        pos = len(pairs)
        for i, (v, e) in enumerate(pairs):
            rv = real(v)
            if (rv > r) if minimize else (rv < r):
                pos = i
                break
            # rv is at least as good as r
            if e.mask & emask == e.mask and (rv != r or v == value):
                return False
        # drop pairs the newcomer dominates: env subsumed and value no better
        keep = []
        for i, (v, e) in enumerate(pairs):
            rv = real(v)
            worse = (rv > r) if minimize else (rv < r)
            if (worse or v == value) and emask & e.mask == emask:
                if i < pos:
                    pos -= 1
                continue
            keep.append(pairs[i])
        keep.insert(pos, LabeledValue(value, env))
        self._pairs = keep
        return True

    def add(self, value, env, db: ConflictDatabase | None = None) -> bool:
        return self.insert(value, env, db)

    def query(self, env: Environment) -> set:
        """Values of the best subsuming pairs; empty set if nothing subsumes ``env``."""
        m = env.mask
        out = set()
        best = None
        for v, e in self._pairs:
            if e.mask & m == e.mask:
                r = real(v)
                if best is None:
                    best = r
                elif r != best:
                    break
                out.add(v)
        return out

    def best(self, env: Environment):
        """The best real value among pairs subsuming ``env``, or None."""
        m = env.mask
        for v, e in self._pairs:
            if e.mask & m == e.mask:
                return real(v)
        return None

    def purge(self, db: ConflictDatabase) -> bool:
        before = len(self._pairs)
        self._pairs = [p for p in self._pairs if not db.is_conflicted(p.env)]
        return len(self._pairs) != before

    purge_conflicted = purge

    def map(self, f: Callable, ordering: Ordering | None = None, db=None) -> LabeledValueSet:
        out = LabeledValueSet(ordering=ordering or self.ordering)
        for v, e in self._pairs:
            out.insert(f(v), e, db)
        return out

    def render(self, keep_infinite: bool = False) -> str:
        items = [
            (v, e)
            for v, e in self._pairs
            if keep_infinite or math.isfinite(real(v))
        ]
        items.sort(key=lambda p: (real(p[0]), str(p[0]) if isinstance(p[0], tuple) else "", p[1].sort_key()))
        inner = ", ".join(f"({_format_value(v)}, {e.render()})" for v, e in items)
        return "{" + inner + "}"


def apply(
    f: Callable,
    a: LabeledValueSet,
    b: LabeledValueSet,
    db: ConflictDatabase | None = None,
    ordering: Ordering | None = None,
) -> LabeledValueSet:
    """Labeled application of ``f`` over the cross product of two sets."""
    out = LabeledValueSet(ordering=ordering or a.ordering)
    for va, ea in a:
        for vb, eb in b:
            u = union(ea, eb, db)
            if u is not BOTTOM:
                out.insert(f(va, vb), u, db)
    return out
