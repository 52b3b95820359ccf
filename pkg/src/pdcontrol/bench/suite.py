"""Running example specs and writing CSV/JSON reports.

Config files are INI-style: an optional ``[defaults]`` section plus one
``[run NAME]`` section per run, each holding ``key = value`` lines whose keys
are :class:`ExampleSpec` fields.  Example::

    [defaults]
    example = 1
    n_cells = 64

    [run pd-c]
    method = PD-C

    [run pd-i]
    method = PD-I

An optional ``[suite]`` section accepts ``wall_time = false`` (write empty
wall-time cells so reports are byte-reproducible) and ``workers = N``.
"""
from __future__ import annotations

import configparser
import csv
import io
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from ..errors import ConfigurationError, PDControlError
from ..solver import solve
from .examples import ExampleSpec, build_example, step_rule
from .metrics import compute_errors, noz

logger = logging.getLogger(__name__)

CSV_COLUMNS = ["method", "mesh_h", "mesh_tau", "iterations", "pde_solves", "objective",
               "err_u_abs", "err_u_rel", "err_y_abs", "err_y_rel", "noz", "wall_time_s"]

_INT_FIELDS = {"example", "n_cells", "n_time_steps", "max_iter", "seed"}
_BOOL_FIELDS = {"gate", "estimate_norm"}
_STR_FIELDS = {"method", "model", "backend", "input_scaling", "name"}


@dataclass
class RunResult:
    spec: ExampleSpec
    row: dict
    converged: bool
    error: Optional[str] = None
    report: object = None


@dataclass
class BenchReport:
    results: list[RunResult] = field(default_factory=list)

    @property
    def rows(self) -> list[dict]:
        return [r.row for r in self.results]

    @property
    def all_converged(self) -> bool:
        return all(r.converged for r in self.results)

    @property
    def exit_code(self) -> int:
        return 0 if self.all_converged else 1

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for row in self.rows:
            writer.writerow({k: _cell(row.get(k)) for k in CSV_COLUMNS})
        return buf.getvalue()

    def summary(self) -> dict:
        runs = []
        for r in self.results:
            entry = {"name": r.spec.name, "example": r.spec.example, "converged": r.converged,
                     **{k: r.row.get(k) for k in CSV_COLUMNS}}
            if r.error:
                entry["error"] = r.error
            runs.append(entry)
        return {"n_runs": len(runs), "all_converged": self.all_converged, "runs": runs}

    def write(self, csv_path, summary_path=None) -> tuple[Path, Path]:
        csv_path = Path(csv_path)
        summary_path = Path(summary_path) if summary_path else csv_path.with_suffix(".json")
        csv_path.parent.mkdir(parents=True, exist_ok=True)
        csv_path.write_text(self.to_csv())
        summary_path.write_text(json.dumps(self.summary(), indent=2))
        return csv_path, summary_path


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return v


def run_spec(spec: ExampleSpec, log_every: int = 0, record_wall_time: bool = True,
             monitor_energy: bool = False) -> RunResult:
    """Build and solve one spec; solver errors are caught and reported as a failed run."""
    row = {k: None for k in CSV_COLUMNS}
    row.update(method=spec.method, mesh_h=spec.h, mesh_tau=spec.tau)
    try:
        prob = build_example(spec)
        rep = solve(prob, step_rule(spec), tol=spec.tol, max_iter=spec.max_iter,
                    log_every=log_every, monitor_energy=monitor_energy)
    except PDControlError as exc:
        logger.error("run %s failed: %s", spec.name or spec.method, exc)
        return RunResult(spec, row, False, error=str(exc))
    row.update(iterations=rep.iterations, pde_solves=rep.pde_solves, objective=rep.objective)
    if prob.exact is not None:
        row.update(compute_errors(rep.u, rep.y, prob.exact, prob.op.control_grid,
                                  prob.op.state_grid))
    if spec.example == 2:
        row["noz"] = noz(rep.u)
    if record_wall_time:
        row["wall_time_s"] = rep.wall_time
    return RunResult(spec, row, rep.converged, report=rep)


def _convert(key: str, raw: str):
    if key not in ExampleSpec.field_names() or key == "extra":
        raise ConfigurationError(f"unknown config key {key!r}")
    if key in _STR_FIELDS:
        return raw
    if key in _BOOL_FIELDS:
        if raw.lower() not in ("true", "false", "1", "0", "yes", "no"):
            raise ConfigurationError(f"{key} must be a boolean, got {raw!r}")
        return raw.lower() in ("true", "1", "yes")
    try:
        return int(raw) if key in _INT_FIELDS else float(raw)
    except ValueError as exc:
        raise ConfigurationError(f"bad value for {key}: {raw!r}") from exc


def parse_config(text: str, base_dir: Optional[Path] = None):
    """Specs (in file order) and suite options from config text."""
    parser = configparser.ConfigParser(default_section="__none__", interpolation=None,
                                       inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigurationError(f"unreadable config: {exc}") from exc
    defaults = dict(parser["defaults"]) if parser.has_section("defaults") else {}
    options = dict(parser["suite"]) if parser.has_section("suite") else {}
    specs = []
    for section in parser.sections():
        if section in ("defaults", "suite"):
            continue
        if not section.startswith("run"):
            raise ConfigurationError(f"unknown section [{section}]")
        values = {**defaults, **dict(parser[section])}
        kwargs = {k: _convert(k, v) for k, v in values.items()}
        if "example" not in kwargs:
            raise ConfigurationError(f"[{section}] has no example id")
        if base_dir is not None and "model" in kwargs and not Path(kwargs["model"]).is_absolute():
            kwargs["model"] = str(base_dir / kwargs["model"])
        kwargs.setdefault("name", section[3:].strip() or section)
        specs.append(ExampleSpec(**kwargs))
    return specs, {
        "wall_time": _convert("gate", options.get("wall_time", "true")),
        "workers": int(options.get("workers", 1)),
    }


def run_specs(specs, workers: int = 1, record_wall_time: bool = True,
              log_every: int = 0) -> BenchReport:
    def one(spec):
        return run_spec(spec, log_every=log_every, record_wall_time=record_wall_time)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(one, specs))  # map keeps config order
    else:
        results = [one(s) for s in specs]
    return BenchReport(results)


def run_suite(config_path, out: Optional[str] = None, log_every: int = 0) -> BenchReport:
    """Run every ``[run ...]`` section of the config and write the CSV + JSON summary.

    The report is written even if some runs fail; ``report.exit_code`` is
    nonzero unless every run converged.
    """
    path = Path(config_path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    specs, options = parse_config(text, base_dir=path.parent)
    report = run_specs(specs, workers=options["workers"], record_wall_time=options["wall_time"],
                       log_every=log_every)
    if out is not None:
        report.write(out)
    return report
