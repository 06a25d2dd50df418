"""Choice variables, environments and the minimal-conflict database.

An environment is a partial assignment of choice variables.  Every
(variable, option) assignment owns one bit of an integer mask, so
subsumption is a mask test and union is an OR plus a popcount check.
Environments are interned per :class:`ChoiceSpace`; two environments over
the same space are equal exactly when they are the same object.
"""

from __future__ import annotations

import itertools
from typing import Iterable, Iterator, Mapping, Sequence

__all__ = [
    "BOTTOM",
    "CapacityError",
    "ChoiceSpace",
    "ConflictDatabase",
    "Environment",
    "avoid",
    "constituent_kernels",
    "subsumes",
    "union",
]


class CapacityError(RuntimeError):
    """Raised when an enumeration would exceed its configured cap."""


class _Bottom:
    __slots__ = ()

    def __repr__(self) -> str:
        return "BOTTOM"

    def __bool__(self) -> bool:
        return False

    def __reduce__(self):
        return (_bottom, ())


def _bottom() -> "_Bottom":
    return BOTTOM


BOTTOM = _Bottom()
"""The failed union: no consistent environment holds both operands."""


class Environment:
    __slots__ = ("space", "mask", "varmask", "items", "__weakref__")

    def __init__(self, space: ChoiceSpace, mask: int, varmask: int, items: tuple):
        self.space = space
        self.mask = mask
        self.varmask = varmask
        self.items = items

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self):
        return iter(self.items)

    def __hash__(self) -> int:
        return hash(self.mask)

    def __eq__(self, other) -> bool:
        if self is other:
            return True
        if not isinstance(other, Environment):
            return NotImplemented
        return self.space is other.space and self.mask == other.mask

    def __lt__(self, other: Environment) -> bool:
        return self.sort_key() < other.sort_key()

    def __reduce__(self):
        return (_rebuild_env, (self.space, self.items))

    def sort_key(self) -> tuple:
        return (len(self.items), self.items)

    def subsumes(self, other: Environment) -> bool:
        return subsumes(self, other)

    @property
    def is_empty(self) -> bool:
        return not self.items

    def as_dict(self) -> dict[str, str]:
        sp = self.space
        return {sp.names[v]: sp.domains[v][o] for v, o in self.items}

    def option_of(self, var: int) -> int | None:
        for v, o in self.items:
            if v == var:
                return o
        return None

    def render(self) -> str:
        sp = self.space
        inner = ", ".join(f"{sp.names[v]}={sp.domains[v][o]}" for v, o in self.items)
        return "{" + inner + "}"

    def __repr__(self) -> str:
        return self.render()


def _rebuild_env(space: ChoiceSpace, items: tuple) -> Environment:
    return space.from_items(items)


class ChoiceSpace:
    """Ordered choice variables, each with an ordered, non-empty domain."""

    def __init__(self, variables: Iterable[tuple[str, Sequence[str]]] = ()):
        names: list[str] = []
        domains: list[tuple[str, ...]] = []
        for name, options in variables:
            options = tuple(str(o) for o in options)
            if name in names:
                raise ValueError(f"duplicate choice variable {name!r}")
            if not options:
                raise ValueError(f"choice variable {name!r} has an empty domain")
            if len(set(options)) != len(options):
                raise ValueError(f"duplicate option in domain of {name!r}")
            names.append(str(name))
            domains.append(options)
        self.names: tuple[str, ...] = tuple(names)
        self.domains: tuple[tuple[str, ...], ...] = tuple(domains)
        self._index = {n: i for i, n in enumerate(self.names)}
        self._opt_index = [{o: j for j, o in enumerate(d)} for d in self.domains]
        offsets = []
        off = 0
        for d in self.domains:
            offsets.append(off)
            off += len(d)
        self._offsets = offsets
        # bit -> (var, option)
        self._bit_owner = [(v, j) for v, d in enumerate(self.domains) for j in range(len(d))]
        self._interned: dict[int, Environment] = {}
        self._union_cache: dict[tuple[int, int], int | None] = {}
        self._kernels: dict[int, list[Environment]] = {}
        self.empty = self._intern(0)

    def __len__(self) -> int:
        return len(self.names)

    def __repr__(self) -> str:
        return f"ChoiceSpace({list(zip(self.names, self.domains))!r})"

    def __reduce__(self):
        return (ChoiceSpace, (list(zip(self.names, self.domains)),))

    def same_as(self, other: ChoiceSpace) -> bool:
        return self.names == other.names and self.domains == other.domains

    # -- construction ------------------------------------------------------

    def _intern(self, mask: int) -> Environment:
        env = self._interned.get(mask)
        if env is None:
            items = []
            varmask = 0
            m = mask
            while m:
                low = m & -m
                v, o = self._bit_owner[low.bit_length() - 1]
                items.append((v, o))
                varmask |= 1 << v
                m ^= low
            env = Environment(self, mask, varmask, tuple(items))
            self._interned[mask] = env
        return env

    def var_index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise ValueError(f"unknown choice variable {name!r}") from None

    def option_index(self, var: int, option: str) -> int:
        try:
            return self._opt_index[var][str(option)]
        except KeyError:
            raise ValueError(
                f"unknown option {option!r} for choice variable {self.names[var]!r}"
            ) from None

    def bit(self, var: int, option: int) -> int:
        if not 0 <= var < len(self.domains) or not 0 <= option < len(self.domains[var]):
            raise ValueError(f"assignment ({var}, {option}) is outside the choice space")
        return 1 << (self._offsets[var] + option)

    def from_items(self, items: Iterable[tuple[int, int]]) -> Environment:
        mask = 0
        seen = set()
        for v, o in items:
            if v in seen:
                raise ValueError(f"variable {self.names[v]!r} assigned twice")
            seen.add(v)
            mask |= self.bit(v, o)
        return self._intern(mask)

    def env(self, assignments: Mapping[str, str] | Iterable[tuple[str, str]] = ()) -> Environment:
        """Build an environment from ``{variable: option}`` names."""
        if isinstance(assignments, Mapping):
            assignments = assignments.items()
        items = []
        for name, option in assignments:
            v = self.var_index(name)
            items.append((v, self.option_index(v, option)))
        return self.from_items(items)

    def complete_count(self) -> int:
        n = 1
        for d in self.domains:
            n *= len(d)
        return n

    def complete_environments(self) -> Iterator[Environment]:
        for combo in itertools.product(*(range(len(d)) for d in self.domains)):
            yield self.from_items(enumerate(combo))

    # -- algebra (memoized on masks) -----------------------------------------

    def _union_mask(self, a: int, b: int) -> int | None:
        key = (a, b) if a <= b else (b, a)
        try:
            return self._union_cache[key]
        except KeyError:
            pass
        m = a | b
        # one bit per assigned variable iff no variable got two options
        env_a = self._interned[a]
        env_b = self._interned[b]
        if m.bit_count() != (env_a.varmask | env_b.varmask).bit_count():
            res = None
        else:
            res = m
        self._union_cache[key] = res
        return res


def _check_space(e: Environment, e2: Environment) -> None:
    if e.space is not e2.space:
        raise ValueError("environments belong to different choice spaces")


def subsumes(e: Environment, e2: Environment) -> bool:
    """True iff every assignment of ``e`` also appears in ``e2``."""
    if e.space is not e2.space:
        _check_space(e, e2)
    return e.mask & e2.mask == e.mask


def union(e, e2, db: ConflictDatabase | None = None):
    """Merge two environments; :data:`BOTTOM` on contradiction or known conflict."""
    if e is BOTTOM or e2 is BOTTOM:
        return BOTTOM
    if e.space is not e2.space:
        _check_space(e, e2)
    if e.mask | e2.mask == e2.mask:
        res = e2
    elif e.mask | e2.mask == e.mask:
        res = e
    else:
        m = e.space._union_mask(e.mask, e2.mask)
        if m is None:
            return BOTTOM
        res = e.space._intern(m)
    if db is not None and db.is_conflicted(res):
        return BOTTOM
    return res


def constituent_kernels(c: Environment, space: ChoiceSpace | None = None) -> list[Environment]:
    """Single-assignment environments that each guarantee avoidance of ``c``."""
    space = space or c.space
    if c.is_empty:
        raise ValueError("the empty environment cannot be avoided")
    cached = space._kernels.get(c.mask)
    if cached is None:
        cached = []
        for v, o in c.items:
            for j in range(len(space.domains[v])):
                if j != o:
                    cached.append(space.from_items([(v, j)]))
        space._kernels[c.mask] = cached
    return list(cached)


def minimal_environments(envs: Iterable[Environment]) -> list[Environment]:
    """Drop every environment subsumed by another one in the collection."""
    uniq = sorted(set(envs), key=Environment.sort_key)
    kept: list[Environment] = []
    for e in uniq:
        if not any(k.mask & e.mask == k.mask for k in kept):
            kept.append(e)
    return kept


def avoid(e, c: Environment, db: ConflictDatabase | None = None) -> list[Environment]:
    """Minimal consistent refinements of ``e`` that are not subsumed by ``c``."""
    if e is BOTTOM:
        raise ValueError("cannot avoid from BOTTOM")
    if c.is_empty:
        return []
    out = []
    for k in constituent_kernels(c):
        u = union(e, k, db)
        if u is not BOTTOM:
            out.append(u)
    return minimal_environments(out)


class ConflictDatabase:
    """Complete cache of minimal inconsistent environments over one space."""

    def __init__(self, space: ChoiceSpace, conflicts: Iterable[Environment] = ()):
        self.space = space
        self._conflicts: list[Environment] = []
        self.version = 0
        self._hit: dict[int, bool] = {}
        self._sat_cache: dict[int, bool] = {}
        for c in conflicts:
            self.add_conflict(c)

    def __len__(self) -> int:
        return len(self._conflicts)

    def __iter__(self) -> Iterator[Environment]:
        return iter(self._conflicts)

    def __contains__(self, env: Environment) -> bool:
        return env in self._conflicts

    def __repr__(self) -> str:
        return f"ConflictDatabase({sorted(self._conflicts, key=Environment.sort_key)!r})"

    @property
    def conflicts(self) -> list[Environment]:
        return list(self._conflicts)

    def copy(self) -> ConflictDatabase:
        db = ConflictDatabase(self.space)
        db._conflicts = list(self._conflicts)
        db.version = self.version
        return db

    def is_conflicted(self, env) -> bool:
        """True iff some stored conflict subsumes ``env`` (BOTTOM counts as conflicted)."""
        if env is BOTTOM:
            return True
        m = env.mask
        hit = self._hit.get(m)
        if hit is None:
            hit = False
            for c in self._conflicts:
                if c.mask & m == c.mask:
                    hit = True
                    break
            self._hit[m] = hit
        return hit

    def add_conflict(self, c: Environment) -> bool:
        """Insert ``c`` keeping the store minimal.  Returns True if the store changed."""
        if c is BOTTOM:
            return False
        if c.space is not self.space:
            raise ValueError("conflict belongs to a different choice space")
        m = c.mask
        for k in self._conflicts:
            if k.mask & m == k.mask:
                return False
        self._conflicts = [k for k in self._conflicts if m & k.mask != m]
        self._conflicts.append(c)
        self.version += 1
        # cached negatives may now be hits; positives stay valid
        self._hit = {key: True for key, v in self._hit.items() if v}
        self._sat_cache.clear()
        return True

    def minimize(self) -> bool:
        """Shrink stored conflicts towards minimal inconsistent environments.

        An assignment is dropped whenever what remains still has no consistent
        completion.  Returns True if the store changed.
        """
        changed = False
        for c in list(self._conflicts):
            if c not in self._conflicts:
                continue
            cur = c
            for item in c.items:
                smaller = self.space.from_items(i for i in cur.items if i != item)
                if not self.is_viable(smaller):
                    cur = smaller
            if cur is not c and self.add_conflict(cur):
                changed = True
        return changed

    def simplify(self, env: Environment) -> Environment:
        """Weakest sub-environment of ``env`` with the same consistent completions.

        An assignment is dropped when every consistent completion of what
        remains already agrees with it.
        """
        cur = env
        for item in env.items:
            smaller = self.space.from_items(i for i in cur.items if i != item)
            if not self.some_complete_consistent(extra=[env], within=smaller):
                cur = smaller
        return cur

    # -- complete-environment queries ----------------------------------------

    def some_complete_consistent(self, extra: Iterable[Environment] = (), within=None) -> bool:
        """True iff some complete environment escapes every conflict.

        ``extra`` are tentative conflicts considered alongside the stored ones;
        ``within`` restricts the search to completions of that environment.
        """
        extra = [e for e in extra if e is not BOTTOM]
        if within is BOTTOM:
            return False
        fixed = within.mask if within is not None else 0
        fixed_vars = within.varmask if within is not None else 0
        if not extra:
            key = fixed
            hit = self._sat_cache.get(key)
            if hit is None:
                hit = self._search(self._conflicts, fixed, fixed_vars, first_only=True) is not None
                self._sat_cache[key] = hit
            return hit
        return self._search(self._conflicts + extra, fixed, fixed_vars, first_only=True) is not None

    def is_viable(self, env) -> bool:
        """True iff some consistent complete environment is subsumed by ``env``."""
        return self.some_complete_consistent(within=env)

    def consistent_complete_environments(self, cap: int = 4096) -> list[Environment]:
        if self.space.complete_count() > cap:
            raise CapacityError(
                f"{self.space.complete_count()} complete environments exceed the cap of {cap}"
            )
        return self._search(self._conflicts, 0, 0, first_only=False)

    def _search(self, conflicts, fixed: int, fixed_vars: int, first_only: bool):
        space = self.space
        nvars = len(space.domains)
        # each conflict is checked at the depth of its last variable
        by_depth: list[list[int]] = [[] for _ in range(nvars + 1)]
        for c in conflicts:
            if c.mask & ~0 == 0 and not c.items:
                return None if first_only else []
            last = max(v for v, _ in c.items)
            by_depth[last].append(c.mask)
        bits = [[space.bit(v, o) for o in range(len(space.domains[v]))] for v in range(nvars)]
        found: list[Environment] = []

        def dfs(v: int, mask: int):
            if v == nvars:
                env = space._intern(mask)
                if first_only:
                    return env
                found.append(env)
                return None
            if fixed_vars >> v & 1:
                choices = [b for b in bits[v] if b & fixed]
            else:
                choices = bits[v]
            checks = by_depth[v]
            for b in choices:
                m = mask | b
                ok = True
                for cm in checks:
                    if cm & m == cm:
                        ok = False
                        break
                if ok:
                    r = dfs(v + 1, m)
                    if r is not None:
                        return r
            return None

        res = dfs(0, 0)
        return res if first_only else found
