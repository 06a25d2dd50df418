"""Compile a labeled distance graph into its minimal dispatchable form.

The pipeline mirrors the unlabeled fast algorithm: contract rigid components
first, then run one labeled Bellman-Ford per source and keep only the
shortest-path values that no predecessor path dominates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterator, NamedTuple

from .environments import (
    BOTTOM,
    ChoiceSpace,
    ConflictDatabase,
    Environment,
    avoid,
    minimal_environments,
    union,
)
from .lvs import EPS, LabeledValueSet, real
from .plan import LabeledDistanceGraph, LabeledSTN, to_labeled_distance_graph

__all__ = [
    "CompileError",
    "DispatchableForm",
    "Infeasible",
    "PredecessorPath",
    "RigidComponent",
    "SsspState",
    "compile_graph",
    "compile_plan",
    "enumerate_predecessor_paths",
    "extract_negative_cycle_conflicts",
    "find_rigid_components",
    "iter_predecessor_paths",
    "labeled_bellman_ford",
    "prune_dominated",
    "rewrite_rigid_component",
]

INF = math.inf
NIL = None


class CompileError(RuntimeError):
    """An internal invariant of the compiler was violated."""


@dataclass
class SsspState:
    source: int
    d: list[LabeledValueSet]
    space: ChoiceSpace
    feasible: bool = True

    def pairs(self, v: int):
        return self.d[v]


class PredecessorPath(NamedTuple):
    vertices: tuple[int, ...]
    steps: tuple  # the (value, env) pair used to enter each non-source vertex
    env: Environment
    min_weight_after_source: float


@dataclass
class RigidComponent:
    members: frozenset[int]
    env: Environment
    leader: int
    offsets: dict[int, float]

    def zero_related(self) -> list[frozenset[int]]:
        by_offset: dict[float, set[int]] = {}
        for m, off in self.offsets.items():
            by_offset.setdefault(off, set()).add(m)
        return [frozenset(s) for _, s in sorted(by_offset.items()) if len(s) >= 2]


@dataclass
class DispatchableForm:
    graph: LabeledDistanceGraph
    zero_related: list[tuple[frozenset[int], Environment]]
    conflicts: ConflictDatabase
    space: ChoiceSpace
    rigid_components: list[RigidComponent] = field(default_factory=list)

    @property
    def names(self) -> list[str]:
        return self.graph.names


@dataclass
class Infeasible:
    conflicts: ConflictDatabase
    reason: str = "no consistent complete environment"

    def __bool__(self) -> bool:
        return False


# -- labeled Bellman-Ford ------------------------------------------------------


def _edge_list(g: LabeledDistanceGraph):
    return [(u, v, list(s)) for (u, v), s in g.weights.items() if s]


def labeled_bellman_ford(
    g: LabeledDistanceGraph,
    s: int,
    db: ConflictDatabase,
    extra_source_edges: bool = False,
) -> SsspState:
    """Labeled single-source shortest paths with predecessor bookkeeping.

    With ``extra_source_edges`` the source is a virtual vertex ``len(g)``
    joined to every vertex by a ``(0, {})`` edge.
    """
    space = g.space
    n = len(g) + (1 if extra_source_edges else 0)
    empty = space.empty
    d = [LabeledValueSet([((INF, NIL), empty)]) for _ in range(n)]
    d[s] = LabeledValueSet([((0.0, NIL), empty)])
    edges = _edge_list(g)
    if extra_source_edges:
        zero = [(0.0, empty)]
        edges = [(s, v, zero) for v in range(len(g))] + edges
    for _ in range(max(n - 1, 0)):
        changed = False
        for u, v, w_pairs in edges:
            du = [p for p in d[u] if p[0][0] != INF]
            if not du:
                continue
            dv = d[v]
            for (val, _), eu in du:
                for w, ew in w_pairs:
                    env = union(eu, ew, db)
                    if env is BOTTOM:
                        continue
                    if dv.insert((val + w, u), env, db):
                        changed = True
        if not changed:
            break
    state = SsspState(s, d, space)
    extract_negative_cycle_conflicts(edges, state, db)
    for lvs in d:
        lvs.purge(db)
    state.feasible = db.some_complete_consistent()
    return state


def extract_negative_cycle_conflicts(edges, state: SsspState, db: ConflictDatabase) -> list[Environment]:
    """Add every environment under which some edge can still be relaxed."""
    if isinstance(edges, LabeledDistanceGraph):
        edges = _edge_list(edges)
    d = state.d
    found: list[Environment] = []
    for u, v, w_pairs in edges:
        relaxed = []
        for (val, _), eu in d[u]:
            if val == INF:
                continue
            for w, ew in w_pairs:
                env = union(eu, ew)
                if env is not BOTTOM:
                    relaxed.append((val + w, env))
        if not relaxed:
            continue
        dv = list(d[v])
        for d_v, e_v in dv:
            rv = d_v[0]
            for d_uw, e_uw in relaxed:
                if not rv > d_uw:
                    continue
                base = union(e_v, e_uw, db)
                if base is BOTTOM:
                    continue
                current = [base]
                for d2, e2 in dv:
                    if d2[0] <= d_uw:
                        nxt = []
                        for c in current:
                            if union(c, e2) is BOTTOM:
                                nxt.append(c)
                            else:
                                nxt.extend(avoid(c, e2, db))
                        current = minimal_environments(nxt)
                        if not current:
                            break
                for c in current:
                    if db.add_conflict(c):
                        found.append(c)
    return found


# -- predecessor paths ------------------------------------------------------------


def _children(state: SsspState) -> dict[int, list[tuple[int, tuple]]]:
    kids: dict[int, list[tuple[int, tuple]]] = {}
    for y, lvs in enumerate(state.d):
        for pair in lvs:
            (r, pred), _ = pair
            if pred is not None and r != INF:
                kids.setdefault(pred, []).append((y, pair))
    return kids


def _valid(state: SsspState, vertices, steps, env: Environment) -> bool:
    d = state.d
    for y, ((r, _), _) in zip(vertices[1:], steps):
        if d[y].best(env) != r:
            return False
    return True


def iter_predecessor_paths(
    state: SsspState, db: ConflictDatabase | None = None, strict: bool = False
) -> Iterator[PredecessorPath]:
    """Depth-first enumeration of every valid simple path from the source.

    With ``strict`` a revisited vertex raises :class:`CompileError`.
    """
    kids = _children(state)
    s = state.source
    d = state.d

    def walk(vertices, steps, env, minw, on_path):
        yield PredecessorPath(tuple(vertices), tuple(steps), env, minw)
        for y, pair in kids.get(vertices[-1], ()):
            (r, _), e = pair
            new_env = union(env, e, db)
            if new_env is BOTTOM:
                continue
            if d[y].best(new_env) != r:
                continue
            if new_env is not env and not _valid(state, vertices, steps, new_env):
                continue
            if y in on_path:
                # a revisit is never a shortest path in a complete environment
                # without zero cycles; partial-environment validity can still
                # propose one, so the branch is cut rather than reported
                if strict:
                    raise CompileError(
                        f"predecessor cycle through vertex {y} under {new_env.render()}"
                    )
                continue
            vertices.append(y)
            steps.append(pair)
            on_path.add(y)
            yield from walk(vertices, steps, new_env, min(minw, r), on_path)
            on_path.discard(y)
            vertices.pop()
            steps.pop()

    yield from walk([s], [], state.space.empty, INF, {s})


def enumerate_predecessor_paths(
    state: SsspState, visitor: Callable[[PredecessorPath], None], db: ConflictDatabase | None = None
) -> None:
    for path in iter_predecessor_paths(state, db):
        visitor(path)


def prune_dominated(state: SsspState, db: ConflictDatabase | None = None) -> list[tuple[int, float, Environment]]:
    """Surviving ``(target, value, env)`` edge weights out of the source."""
    pruned: set[tuple[int, float, Environment]] = set()
    for path in iter_predecessor_paths(state, db):
        if len(path.vertices) < 3:
            continue
        c = path.vertices[-1]
        (d_c, _), e_c = path.steps[-1]
        if path.env is not e_c:
            continue
        key = (c, d_c, e_c)
        if key in pruned:
            continue
        earlier = path.steps[:-1]
        if d_c < 0:
            for (d_b, _), e_b in earlier:
                if d_b < 0 and e_b is e_c:
                    pruned.add(key)
                    break
        else:
            for (d_b, _), e_b in earlier:
                if d_b <= d_c + EPS and e_b.mask & e_c.mask == e_b.mask:
                    pruned.add(key)
                    break
    # a pruned value also covers equal values reached through another
    # predecessor under a narrower environment
    by_vertex: dict[int, list[tuple[float, int]]] = {}
    for c, r, e in pruned:
        by_vertex.setdefault(c, []).append((r, e.mask))
    out = []
    seen = set()
    for c, lvs in enumerate(state.d):
        if c == state.source:
            continue
        covers = by_vertex.get(c, ())
        for (r, _), e in lvs:
            if r == INF or (c, r, e) in seen:
                continue
            if any(r == pr and pm & e.mask == pm for pr, pm in covers):
                continue
            seen.add((c, r, e))
            out.append((c, r, e))
    return out


# -- rigid components ---------------------------------------------------------------


def _rc_dominated(members: frozenset, env: Environment, other: tuple) -> bool:
    om, oe = other
    return members <= om and oe.mask & env.mask == oe.mask


def find_rigid_components(g: LabeledDistanceGraph, db: ConflictDatabase) -> list[RigidComponent]:
    """Maximal rigid components with minimal environments."""
    n = len(g)
    if n == 0:
        return []
    x = n
    state = labeled_bellman_ford(g, x, db, extra_source_edges=True)
    if not state.feasible:
        return []
    d = state.d
    kids = _children(state)
    found: list[tuple[frozenset, Environment]] = []

    def record(members: frozenset, env: Environment) -> None:
        if db.is_conflicted(env):
            return
        for other in found:
            if _rc_dominated(members, env, other):
                return
        found[:] = [o for o in found if not _rc_dominated(o[0], o[1], (members, env))]
        found.append((members, env))

    # a loop through start never leaves start's strongly connected component
    comp_of = _scc_ids({u: [y for y, _ in ys if y != x] for u, ys in kids.items() if u != x}, n)
    for start in range(n):
        if not any(comp_of[y] == comp_of[start] for y, _ in kids.get(start, ())):
            continue
        counts = {start: 1}
        vertices = [start]
        steps: list = []

        def walk(env: Environment) -> None:
            for y, pair in kids.get(vertices[-1], ()):
                (r, _), e = pair
                if y == x or comp_of[y] != comp_of[start]:
                    continue
                new_env = union(env, e, db)
                if new_env is BOTTOM or d[y].best(new_env) != r:
                    continue
                if new_env is not env:
                    if not _valid_loop(d, vertices, steps, new_env):
                        continue
                if y == start:
                    record(frozenset(vertices), new_env)
                    continue
                if counts.get(y, 0) >= 2:
                    continue
                counts[y] = counts.get(y, 0) + 1
                vertices.append(y)
                steps.append(pair)
                walk(new_env)
                steps.pop()
                vertices.pop()
                counts[y] -= 1

        walk(g.space.empty)

    comps = []
    for members, env in found:
        bests = {m: d[m].best(env) for m in members}
        leader = min(members, key=lambda m: (bests[m], m))
        offsets = {m: bests[m] - bests[leader] for m in members}
        comps.append(RigidComponent(members, env, leader, offsets))
    comps.sort(key=_rc_key)
    return comps


def _scc_ids(adj: dict[int, list[int]], n: int) -> list[int]:
    """Tarjan's algorithm, iterative; returns a component id per vertex."""
    index = [-1] * n
    low = [0] * n
    comp = [-1] * n
    on_stack = [False] * n
    stack: list[int] = []
    counter = 0
    ncomp = 0
    for root in range(n):
        if index[root] >= 0:
            continue
        work = [(root, iter(adj.get(root, ())))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack[root] = True
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if index[w] < 0:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack[w] = True
                    work.append((w, iter(adj.get(w, ()))))
                    advanced = True
                    break
                if on_stack[w]:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                low[work[-1][0]] = min(low[work[-1][0]], low[v])
            if low[v] == index[v]:
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp[w] = ncomp
                    if w == v:
                        break
                ncomp += 1
    return comp


def _valid_loop(d, vertices, steps, env) -> bool:
    for y, ((r, _), _) in zip(vertices[1:], steps):
        if d[y].best(env) != r:
            return False
    return True


def _rc_key(rc: RigidComponent):
    return (-len(rc.members), len(rc.env), sorted(rc.members), rc.env.sort_key())


def _replace_with_avoid(lvs: LabeledValueSet, env: Environment, db) -> LabeledValueSet:
    out = LabeledValueSet()
    for w, e in lvs:
        if env.mask & e.mask == env.mask:
            continue
        for e2 in avoid(e, env, db):
            out.insert(w, e2, db)
    return out


def rewrite_rigid_component(
    g: LabeledDistanceGraph,
    rc: RigidComponent,
    out: LabeledDistanceGraph,
    db: ConflictDatabase,
) -> None:
    """Emit fixed-offset edges for ``rc`` and hide the component from ``g``."""
    env = rc.env
    a = rc.leader
    for b in sorted(rc.members):
        if b == a:
            continue
        off = rc.offsets[b]
        out.add(a, b, off, env, db)
        out.add(b, a, -off, env, db)
    members = rc.members
    for (u, v), lvs in list(g.weights.items()):
        u_in, v_in = u in members, v in members
        if u_in and v_in:
            g.set_weight(u, v, _replace_with_avoid(lvs, env, db))
        elif u_in and u != a:
            off = rc.offsets[u]
            for w, e in lvs:
                moved = union(e, env, db)
                if moved is not BOTTOM:
                    g.add(a, v, w + off, moved, db)
            g.set_weight(u, v, _replace_with_avoid(lvs, env, db))
        elif v_in and v != a:
            off = rc.offsets[v]
            for w, e in lvs:
                moved = union(e, env, db)
                if moved is not BOTTOM:
                    g.add(u, a, w - off, moved, db)
            g.set_weight(u, v, _replace_with_avoid(lvs, env, db))


def _merge_zero_groups(groups: list[tuple[frozenset, Environment]], db) -> list[tuple[frozenset, Environment]]:
    """Close zero-related groups under union of overlapping groups."""
    result = list(dict.fromkeys(groups))
    changed = True
    while changed:
        changed = False
        for i in range(len(result)):
            for j in range(i + 1, len(result)):
                (m1, e1), (m2, e2) = result[i], result[j]
                if not (m1 & m2) or m1 <= m2 or m2 <= m1:
                    continue
                env = union(e1, e2, db)
                if env is BOTTOM:
                    continue
                cand = (m1 | m2, env)
                if any(_rc_dominated(cand[0], env, o) for o in result):
                    continue
                result.append(cand)
                changed = True
    # drop groups that a larger group under a weaker environment covers
    kept = []
    for g in result:
        if any(o is not g and o != g and _rc_dominated(g[0], g[1], o) for o in result):
            continue
        kept.append(g)
    return sorted(set(kept), key=lambda z: (sorted(z[0]), z[1].sort_key()))


def _covered(lvs: LabeledValueSet, r: float, env: Environment, db: ConflictDatabase) -> bool:
    """True iff every consistent completion of ``env`` sees a value at least as
    good as ``r`` from some pair listed before ``(r, env)``."""
    better = []
    for v, e in lvs:
        rv = real(v)
        if rv == r and e is env:
            break
        if rv <= r + EPS:
            better.append(e)
    return not db.some_complete_consistent(extra=better, within=env)


def compile_graph(
    g: LabeledDistanceGraph,
    db: ConflictDatabase | None = None,
    max_rigid_iterations: int | None = None,
) -> DispatchableForm | Infeasible:
    g = g.copy()
    db = db if db is not None else ConflictDatabase(g.space)
    out = LabeledDistanceGraph(g.names, g.space)
    groups: list[tuple[frozenset, Environment]] = []
    rigid: list[RigidComponent] = []
    cap = max_rigid_iterations if max_rigid_iterations is not None else 4 * len(g) + 8
    for _ in range(cap):
        comps = find_rigid_components(g, db)
        if not db.some_complete_consistent():
            return Infeasible(db)
        g.purge(db)
        if not comps:
            break
        rc = comps[0]
        rigid.append(rc)
        rewrite_rigid_component(g, rc, out, db)
        for z in rc.zero_related():
            groups.append((z, rc.env))
    else:
        raise CompileError("rigid-component rewriting did not converge")
    for s in g.vertices:
        state = labeled_bellman_ford(g, s, db)
        if not state.feasible:
            return Infeasible(db)
        for c, r, e in prune_dominated(state, db):
            if not _covered(state.d[c], r, e, db):
                out.add(s, c, r, e, db)
        out.purge(db)
        g.purge(db)
    # pairs and groups whose environment has no consistent completion are dead
    # weight for the dispatcher; shrink the conflicts so that purging sees them
    db.minimize()
    out.purge(db)
    for (u, v), lvs in list(out.weights.items()):
        simple = LabeledValueSet()
        for w, e in lvs:
            if db.is_viable(e):
                simple.insert(w, db.simplify(e), db)
        out.set_weight(u, v, LabeledValueSet([p for p in simple if not _covered(simple, p[0], p[1], db)]))
    groups = [(m, db.simplify(e)) for m, e in groups if db.is_viable(e)]
    groups = _merge_zero_groups(groups, db)
    return DispatchableForm(out, groups, db, g.space, rigid)


def compile_plan(plan: LabeledSTN, **kwargs) -> DispatchableForm | Infeasible:
    return compile_graph(to_labeled_distance_graph(plan), **kwargs)
