from .config import Scenario, load_scenario, scenario_from_dict
from .suites import (run_scenario, suite_components, suite_theorem_1_1,
                     suite_theorem_1_2, suite_corollaries_5,
                     suite_negative_controls, suite_refinement,
                     random_digraph_oracle)
from .report import Report, Check, emit_report

__all__ = [
    "Scenario", "load_scenario", "scenario_from_dict",
    "run_scenario", "suite_components", "suite_theorem_1_1",
    "suite_theorem_1_2", "suite_corollaries_5", "suite_negative_controls",
    "suite_refinement", "random_digraph_oracle",
    "Report", "Check", "emit_report",
]
