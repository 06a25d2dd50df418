from __future__ import annotations

import math
import sys

import pytest
from hypothesis import strategies as st

from labeled_stn.environments import ChoiceSpace


def binary_space(*names: str) -> ChoiceSpace:
    return ChoiceSpace([(n, ["1", "2"]) for n in names])


@pytest.fixture
def xy():
    return binary_space("x", "y")


@pytest.fixture
def E(xy):
    """E(x=1, y=2) builds an environment over the x, y space."""

    def make(**kw):
        return xy.env({k: str(v) for k, v in kw.items()})

    return make


def bellman_ford(n: int, weights: dict, s: int):
    """Plain Bellman-Ford on a projected graph: (distances, has_negative_cycle)."""
    d = [math.inf] * n
    d[s] = 0.0
    for _ in range(n - 1):
        for (u, v), w in weights.items():
            if d[u] + w < d[v]:
                d[v] = d[u] + w
    neg = any(d[u] + w < d[v] for (u, v), w in weights.items())
    return d, neg


def environments(space: ChoiceSpace):
    """Strategy for partial environments over ``space``."""
    per_var = [st.one_of(st.none(), st.integers(0, len(dom) - 1)) for dom in space.domains]
    return st.tuples(*per_var).map(
        lambda opts: space.from_items((v, o) for v, o in enumerate(opts) if o is not None)
    )


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.report_lines():
        terminalreporter.write_line(line)
