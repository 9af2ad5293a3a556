import csv
import importlib
import json
import os
from dataclasses import dataclass, field

import structlog

from unmac import __version__, hooks
from unmac.airspace.doctype.scenario_config.scenario_config import load_config
from unmac.airspace.doctype.simulator.simulator import run_monte_carlo
from unmac.airspace.report.monte_carlo_summary.monte_carlo_summary import (
	get_run_columns,
	get_run_data,
	get_unsafe_policies,
)
from unmac.exceptions import ReportWriteError

logger = structlog.get_logger(__name__)

REPORT_FILE = "report.json"
RUNS_FILE = "runs.csv"
FLOAT_FORMAT = "%.6f"


def get_attr(method_path):
	"""Resolve a dotted path registered in ``hooks``."""
	module_name, attr = method_path.rsplit(".", 1)
	return getattr(importlib.import_module(module_name), attr)


def format_cell(value, fieldtype):
	if value is None:
		return ""
	if fieldtype == "Float":
		return FLOAT_FORMAT % value
	if fieldtype == "Int":
		return str(int(value))
	return str(value)


def write_table(path, columns, data):
	"""
	Write report rows as CSV: a header of fieldnames, fixed-point floats and ``\\n`` line endings.

	Raises:
		ReportWriteError: If the file cannot be written.
	"""
	try:
		with open(path, "w", encoding="utf-8", newline="") as f:
			writer = csv.writer(f, lineterminator="\n")
			writer.writerow([c["fieldname"] for c in columns])
			for row in data:
				writer.writerow([format_cell(row.get(c["fieldname"]), c["fieldtype"]) for c in columns])
	except OSError as e:
		raise ReportWriteError(f"Failed to write {path}: {e!s}")
	logger.info("table_written", path=str(path), rows=len(data))
	return path


def ensure_directory(path):
	try:
		os.makedirs(path, exist_ok=True)
	except OSError as e:
		raise ReportWriteError(f"Failed to create output directory {path}: {e!s}")


def write_analysis(out_dir, sigmas=None, dts=None, categories=None):
	"""
	Write every table registered in ``hooks.analysis_reports`` into ``out_dir``.

	Returns:
		list[str]: Paths written, in registry order.
	"""
	filters = {}
	if sigmas:
		filters["sigmas"] = list(sigmas)
	if dts:
		filters["dts"] = list(dts)
	if categories:
		filters["categories"] = list(categories)

	ensure_directory(out_dir)
	paths = []
	for filename, method_path in hooks.analysis_reports.items():
		columns, data = get_attr(method_path)(filters)
		paths.append(write_table(os.path.join(out_dir, filename), columns, data))
	return paths


@dataclass
class RunReport:
	"""Machine-readable result of a Monte Carlo comparison."""

	version: str
	config: dict
	seeds: dict
	summaries: list
	run_columns: list
	runs: list
	unsafe_policies: list = field(default_factory=list)
	report_summary: list = field(default_factory=list)
	chart: dict | None = None

	@property
	def exit_code(self):
		return 2 if self.unsafe_policies else 0

	@classmethod
	def from_results(cls, config, results):
		_, summaries, _, chart, report_summary = get_attr(hooks.simulation_report)({"results": results})
		return cls(
			version=__version__,
			config=config.as_dict(),
			seeds={"fleet_seed": config.scenario.fleet_seed, "noise_seed": config.scenario.noise_seed},
			summaries=summaries,
			run_columns=get_run_columns(),
			runs=get_run_data(results),
			unsafe_policies=get_unsafe_policies(summaries),
			report_summary=report_summary,
			chart=chart,
		)

	def as_dict(self):
		return {
			"version": self.version,
			"config": self.config,
			"seeds": self.seeds,
			"summaries": self.summaries,
			"report_summary": self.report_summary,
			"chart": self.chart,
			"unsafe_policies": self.unsafe_policies,
			"runs": self.runs,
		}


class Experiment:
	"""
	Batch Monte Carlo comparison of safety-disk policies.

	This class:
	- Loads and validates the experiment configuration (JSON or XML document, or schema defaults).
	- Applies command line overrides for runs, policies, seed and workers.
	- Runs every policy on common random numbers and assembles a ``RunReport``.
	- Writes ``report.json`` and ``runs.csv``.
	"""

	def __init__(self, config_path=None, runs=None, policies=None, seed=None, workers=None):
		"""
		Raises:
			ConfigError: If the document is unreadable or invalid, or an override is out of range.
		"""
		self.config_path = config_path
		self.config = load_config(config_path).with_overrides(
			runs=runs, policies=policies, seed=seed, workers=workers
		)

	def run(self):
		config = self.config
		results = run_monte_carlo(
			config.scenario, config.runs, policies=config.policies, workers=config.workers
		)
		report = RunReport.from_results(config, results)
		if report.unsafe_policies:
			logger.warning("safety_violation", policies=report.unsafe_policies)
		return report

	def write(self, report, out_dir):
		"""
		Returns:
			tuple[str, str]: Paths of the JSON report and the per-run CSV.

		Raises:
			ReportWriteError: If the directory or a file cannot be written.
		"""
		ensure_directory(out_dir)
		report_path = os.path.join(out_dir, REPORT_FILE)
		try:
			with open(report_path, "w", encoding="utf-8", newline="\n") as f:
				json.dump(report.as_dict(), f, indent=2)
				f.write("\n")
		except OSError as e:
			raise ReportWriteError(f"Failed to write {report_path}: {e!s}")
		logger.info("report_written", path=report_path, policies=len(report.summaries))

		runs_path = write_table(os.path.join(out_dir, RUNS_FILE), report.run_columns, report.runs)
		return report_path, runs_path
