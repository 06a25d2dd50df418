from __future__ import annotations

import subprocess
import sys

import pytest

from labeled_stn.cli import main
from labeled_stn.plan import ROVER_PLAN_TEXT

SCENARIO = """\
event A controlled
event B activity-end A fixed 45
event C activity-end B fixed 50
event D activity-end B fixed 0
event E controlled
event F controlled
"""

TRACE = (
    "t=0 execute {A}\n"
    "t=45 execute {B} {D} conflicts {x=charge}\n"
    "t=95 execute {C, E, F}\n"
    "COMPLETED A=0 B=45 C=95 D=45 E=95 F=95\n"
)


@pytest.fixture
def files(tmp_path):
    plan = tmp_path / "rover.plan"
    plan.write_text(ROVER_PLAN_TEXT)
    scen = tmp_path / "rover.scenario"
    scen.write_text(SCENARIO)
    return tmp_path, plan, scen


def test_compile_and_dispatch(files, capsys):
    tmp, plan, scen = files
    out = tmp / "rover.lstn"
    assert main(["compile", str(plan), "-o", str(out)]) == 0
    assert out.read_text().startswith("var x { collect, charge }\n")
    assert main(["dispatch", str(out), str(scen)]) == 0
    assert capsys.readouterr().out == TRACE


def test_baseline_compile_and_dispatch(files, capsys):
    tmp, plan, scen = files
    out = tmp / "rover.enum"
    assert main(["compile", "--baseline", str(plan), "-o", str(out)]) == 0
    assert "component {x=collect}" in out.read_text()
    assert main(["dispatch", str(out), str(scen)]) == 0
    assert capsys.readouterr().out.endswith("COMPLETED A=0 B=45 C=95 D=45 E=95 F=95\n")


def test_check(files, capsys):
    _, plan, _ = files
    assert main(["check", str(plan)]) == 0
    assert capsys.readouterr().out.startswith("2 consistent components\n")


def test_inconsistent_plan(tmp_path, capsys):
    p = tmp_path / "bad.plan"
    p.write_text("event A\nevent B\nconstraint A B [5, 6]\nconstraint A B [0, 1]\n")
    assert main(["check", str(p)]) == 1
    assert capsys.readouterr().out.startswith("0 consistent components\n")
    assert main(["compile", str(p)]) == 1
    assert "infeasible" in capsys.readouterr().err


def test_failed_dispatch_exits_one(files, tmp_path, capsys):
    _, plan, _ = files
    out = tmp_path / "rover.lstn"
    main(["compile", str(plan), "-o", str(out)])
    late = tmp_path / "late.scenario"
    late.write_text("event A controlled\nevent B activity-end A fixed 90\n")
    assert main(["dispatch", str(out), str(late)]) == 1
    assert "FAILED" in capsys.readouterr().out


def test_convert_dtn(tmp_path, capsys):
    d = tmp_path / "ex.dtn"
    d.write_text("event A\nevent B\nevent C\ndisj (A B [3,5])\ndisj (B C [0,6]) | (A C [-4,-4])\n")
    assert main(["convert-dtn", str(d)]) == 0
    out = capsys.readouterr().out
    assert "var x1 { 1, 2 }" in out and "constraint A C [-4, -4] if x1=2" in out


def test_generate_is_deterministic(capsys):
    assert main(["generate", "--choices", "3", "--events", "7", "--seed", "4"]) == 0
    a = capsys.readouterr().out
    main(["generate", "--choices", "3", "--events", "7", "--seed", "4"])
    assert capsys.readouterr().out == a


def test_bench_writes_csv(tmp_path, capsys):
    out = tmp_path / "b.csv"
    rc = main(["bench", "--per-size", "1", "--min-choices", "2", "--max-choices", "3", "--repeats", "1", "-o", str(out)])
    assert rc == 0
    assert out.read_text().count("\n") == 3


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["frobnicate"],
        ["compile", "/nonexistent/plan"],
        ["generate", "--events", "1"],
        ["dispatch", "--policy", "lazy", "a", "b"],
    ],
)
def test_usage_errors_exit_two(argv, capsys):
    assert main(argv) == 2


def test_syntax_error_exit_two(tmp_path, capsys):
    p = tmp_path / "bad.plan"
    p.write_text("event A\nconstraint A Z [0, 1]\n")
    assert main(["compile", str(p)]) == 2
    assert "line 2" in capsys.readouterr().err


def test_unknown_scenario_event(files, tmp_path, capsys):
    _, plan, _ = files
    out = tmp_path / "rover.lstn"
    main(["compile", str(plan), "-o", str(out)])
    s = tmp_path / "s"
    s.write_text("event Q controlled\n")
    assert main(["dispatch", str(out), str(s)]) == 2


def test_module_entry_point(files):
    _, plan, _ = files
    r = subprocess.run([sys.executable, "-m", "labeled_stn", "check", str(plan)], capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.startswith("2 consistent components")
