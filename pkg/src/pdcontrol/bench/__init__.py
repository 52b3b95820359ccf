"""Reference experiments: builders, metrics and the config-driven suite runner."""
from .examples import EXAMPLE_DEFAULTS, ExampleSpec, build_example, step_rule
from .metrics import compute_errors, noz
from .suite import CSV_COLUMNS, BenchReport, RunResult, parse_config, run_spec, run_specs, run_suite

__all__ = ["EXAMPLE_DEFAULTS", "ExampleSpec", "build_example", "step_rule", "compute_errors",
           "noz", "CSV_COLUMNS", "BenchReport", "RunResult", "parse_config", "run_spec",
           "run_specs", "run_suite"]
