"""Labeled Simple Temporal Networks: compile plans with discrete choices into a
labeled dispatchable form and execute them greedily, committing to choices
only when forced.  An enumeration baseline serves as oracle and benchmark."""

from __future__ import annotations

from .baseline import compile_components, parallel_dispatch, verify_schedule
from .compiler import CompileError, DispatchableForm, Infeasible, compile_graph, compile_plan
from .dispatcher import ActivityEnd, ExecutionTrace, Scenario, parse_scenario, run
from .environments import BOTTOM, ChoiceSpace, ConflictDatabase, Environment
from .formats import compiled_size, parse_compiled, render_compiled, render_enumeration
from .generator import GeneratorParams, generate, random_scenario
from .lvs import LabeledValueSet, Ordering
from .plan import LabeledSTN, parse_dtn, parse_plan, import_dtn, render_plan, rover_plan

__version__ = "0.1.0"

__all__ = [
    "ActivityEnd",
    "BOTTOM",
    "ChoiceSpace",
    "CompileError",
    "ConflictDatabase",
    "DispatchableForm",
    "Environment",
    "ExecutionTrace",
    "GeneratorParams",
    "Infeasible",
    "LabeledSTN",
    "LabeledValueSet",
    "Ordering",
    "Scenario",
    "compile_components",
    "compile_graph",
    "compile_plan",
    "compiled_size",
    "generate",
    "import_dtn",
    "parallel_dispatch",
    "parse_compiled",
    "parse_dtn",
    "parse_plan",
    "parse_scenario",
    "random_scenario",
    "render_compiled",
    "render_enumeration",
    "render_plan",
    "rover_plan",
    "run",
    "verify_schedule",
]
