"""Translate a small DTN into a Labeled STN and compare both views.

Each disjunction with more than one disjunct becomes a choice variable;
every disjunct is labeled with one of its options.

    python demos/dtn_import.py
"""

from __future__ import annotations

from labeled_stn import compile_plan, import_dtn, parse_dtn, render_compiled, render_plan
from labeled_stn.baseline import consistent_components

DTN_TEXT = """\
event A
event B
event C
disj (A B [3,5])
disj (B C [0,6]) | (A C [-4,-4])
"""


def main() -> None:
    dtn = parse_dtn(DTN_TEXT)
    plan = import_dtn(dtn)
    print("labeled plan:")
    print(render_plan(plan))
    comps = consistent_components(plan)
    print(f"{len(comps)} consistent component(s):", ", ".join(c.env.render() for c in comps))
    form = compile_plan(plan)
    if form:
        print()
        print(render_compiled(form))
    else:
        print("infeasible:", form.reason)


if __name__ == "__main__":
    main()
