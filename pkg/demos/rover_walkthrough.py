"""Rover walkthrough: compile the two-option rover plan, then dispatch it
with a 45-minute drive and a 50-minute sample collection.

    python demos/rover_walkthrough.py
"""

from __future__ import annotations

from labeled_stn import compile_plan, parse_scenario, render_compiled, rover_plan, run, verify_schedule
from labeled_stn.plan import ROVER_PLAN_TEXT

SCENARIO = """\
event A controlled
event B activity-end A fixed 45
event C activity-end B fixed 50
event D activity-end B fixed 0
event E controlled
event F controlled
"""


def main() -> None:
    print("plan:")
    print(ROVER_PLAN_TEXT)
    plan = rover_plan()
    form = compile_plan(plan)
    print("compiled:")
    print(render_compiled(form))
    trace = run(form, parse_scenario(SCENARIO))
    print("trace:")
    print(trace.render())
    envs = verify_schedule(plan, trace.schedule)
    print("schedule satisfies:", ", ".join(e.render() for e in envs))


if __name__ == "__main__":
    main()
