"""Command-line front end.

Exit status: 0 on success, 1 when a plan is infeasible or a dispatch fails,
2 on usage or input errors.
"""

from __future__ import annotations

import argparse
import sys
from typing import Sequence

from .baseline import compile_components, consistent_components, parallel_dispatch
from .bench import bench, bucket_medians, default_suite
from .compiler import Infeasible, compile_plan
from .dispatcher import POLICIES, parse_scenario, run
from .environments import CapacityError
from .formats import read_any, render_compiled, render_enumeration
from .generator import GeneratorParams, generate
from .plan import PlanSyntaxError, import_dtn, parse_dtn, parse_plan, render_plan

OK, FAILED, USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        with open(path, encoding="utf-8") as f:
            return f.read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", encoding="utf-8") as f:
            f.write(text)
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc.strerror}") from None


def cmd_compile(args) -> int:
    plan = parse_plan(_read(args.plan))
    if args.baseline:
        comps = compile_components(plan, args.cap)
        if not comps:
            print("infeasible: 0 consistent components", file=sys.stderr)
            return FAILED
        _write(args.output, render_enumeration(comps, plan.space, plan.events))
        return OK
    form = compile_plan(plan)
    if isinstance(form, Infeasible):
        print(f"infeasible: {form.reason}", file=sys.stderr)
        return FAILED
    _write(args.output, render_compiled(form))
    return OK


def cmd_dispatch(args) -> int:
    compiled = read_any(_read(args.compiled))
    scenario = parse_scenario(_read(args.scenario))
    if args.policy is not None:
        scenario.policy = args.policy
    if args.seed is not None:
        scenario.seed = args.seed
    if args.tick is not None:
        if args.tick <= 0:
            raise UsageError("--tick must be positive")
        scenario.tick = args.tick
    if isinstance(compiled, tuple):
        comps, _, events = compiled
        unknown = set(scenario.activities) | set(scenario.controlled)
        unknown -= set(events)
        if unknown:
            raise UsageError(f"scenario names unknown events: {', '.join(sorted(unknown))}")
        trace = parallel_dispatch(comps, events, scenario)
    else:
        unknown = (set(scenario.activities) | set(scenario.controlled)) - set(compiled.names)
        if unknown:
            raise UsageError(f"scenario names unknown events: {', '.join(sorted(unknown))}")
        trace = run(compiled, scenario)
    sys.stdout.write(trace.render())
    return OK if trace.completed else FAILED


def cmd_check(args) -> int:
    plan = parse_plan(_read(args.plan))
    comps = consistent_components(plan, args.cap)
    print(f"{len(comps)} consistent components")
    for c in comps:
        print(f"  {c.env.render()}")
    return OK if comps else FAILED


def cmd_convert_dtn(args) -> int:
    _write(args.output, render_plan(import_dtn(parse_dtn(_read(args.dtn)))))
    return OK


def cmd_generate(args) -> int:
    try:
        params = GeneratorParams(
            choices=args.choices,
            arity=args.arity,
            events=args.events,
            ratio=args.ratio,
            sharing=args.sharing,
            seed=args.seed,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    _write(args.output, render_plan(generate(params)))
    return OK


def cmd_bench(args) -> int:
    suite = default_suite(
        per_size=args.per_size,
        sharing=args.sharing,
        choices=range(args.min_choices, args.max_choices + 1),
        seed=args.seed,
    )
    out = sys.stdout if args.output in (None, "-") else open(args.output, "w", newline="", encoding="utf-8")
    try:
        records = bench(suite, out, repeats=args.repeats)
    finally:
        if out is not sys.stdout:
            out.close()
    for low, count, med in bucket_medians(records):
        print(f"components >= {low}: n={count} median ratio {med:.1f}", file=sys.stderr)
    bad = [r for r in records if r.status not in ("ok", "infeasible")]
    for r in bad:
        print(f"{r.problem_id}: {r.status}", file=sys.stderr)
    return FAILED if bad else OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="labeled-stn", description="Compile and dispatch Labeled STNs.")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("compile", help="compile a plan file")
    c.add_argument("plan")
    c.add_argument("-o", "--output")
    c.add_argument("--baseline", action="store_true", help="emit the enumeration form instead")
    c.add_argument("--cap", type=int, default=4096, help="component cap for --baseline")
    c.set_defaults(func=cmd_compile)

    d = sub.add_parser("dispatch", help="dispatch a compiled file under a scenario")
    d.add_argument("compiled")
    d.add_argument("scenario")
    d.add_argument("--policy", choices=POLICIES)
    d.add_argument("--seed", type=int)
    d.add_argument("--tick", type=float)
    d.set_defaults(func=cmd_dispatch)

    k = sub.add_parser("check", help="count consistent components by brute force")
    k.add_argument("plan")
    k.add_argument("--cap", type=int, default=4096)
    k.set_defaults(func=cmd_check)

    v = sub.add_parser("convert-dtn", help="translate a DTN file into a plan file")
    v.add_argument("dtn")
    v.add_argument("-o", "--output")
    v.set_defaults(func=cmd_convert_dtn)

    g = sub.add_parser("generate", help="write a random structured plan")
    g.add_argument("--choices", type=int, default=2)
    g.add_argument("--arity", type=int, default=2)
    g.add_argument("--events", type=int, default=6)
    g.add_argument("--ratio", type=float, default=1.5)
    g.add_argument("--sharing", type=float, default=0.5)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("-o", "--output")
    g.set_defaults(func=cmd_generate)

    b = sub.add_parser("bench", help="run the size/time/latency benchmark, CSV out")
    b.add_argument("--per-size", type=int, default=3)
    b.add_argument("--min-choices", type=int, default=2)
    b.add_argument("--max-choices", type=int, default=11)
    b.add_argument("--sharing", type=float, default=0.5)
    b.add_argument("--repeats", type=int, default=5)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("-o", "--output")
    b.set_defaults(func=cmd_bench)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return USAGE if exc.code else OK
    try:
        return args.func(args)
    except (UsageError, PlanSyntaxError, CapacityError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE


if __name__ == "__main__":
    sys.exit(main())
