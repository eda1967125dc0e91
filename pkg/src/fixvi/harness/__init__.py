"""Scenario parsing, run orchestration and the command line."""

from .runner import RunSummary, compare, emit_plotdata, run_config, run_scenario
from .scenario import ScenarioError, ScenarioFile, parse_scenario, parse_text, serialize

__all__ = ["RunSummary", "ScenarioError", "ScenarioFile", "compare", "emit_plotdata", "parse_scenario",
           "parse_text", "run_config", "run_scenario", "serialize"]
