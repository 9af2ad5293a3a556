import json
import logging
import sys

import click
import structlog

from unmac import __version__, hooks
from unmac.airspace.doctype.separation_model.separation_model import (
	pairwise_unmac,
	unmac_diameter_unknown_dir,
)
from unmac.exceptions import InvalidParameterError, UnmacError
from unmac.unmac import Experiment, write_analysis

logger = structlog.get_logger(__name__)

POSITIVE = click.FloatRange(min=0, min_open=True)


def stderr_logger_factory(*args):
	return structlog.PrintLogger(file=sys.stderr)


def configure_logging(verbose=False):
	structlog.configure(
		processors=[
			structlog.processors.add_log_level,
			structlog.processors.TimeStamper(fmt="iso"),
			structlog.dev.ConsoleRenderer(colors=False),
		],
		wrapper_class=structlog.make_filtering_bound_logger(logging.DEBUG if verbose else logging.INFO),
		logger_factory=stderr_logger_factory,
		cache_logger_on_first_use=False,
	)


def split_policies(value):
	if not value:
		return None
	return [p.strip() for p in value.split(",") if p.strip()]


@click.group(help=hooks.app_description)
@click.option("--verbose", is_flag=True, help="Log at DEBUG level.")
@click.version_option(__version__, prog_name=hooks.app_name)
def cli(verbose):
	configure_logging(verbose)


@cli.command("analyze")
@click.option("--sigma", "sigmas", type=POSITIVE, multiple=True, help="Localization sigma in meters.")
@click.option("--dt", "dts", type=POSITIVE, multiple=True, help="Broadcast interval in seconds.")
@click.option("--category", "categories", type=click.IntRange(1, 4), multiple=True, help="Speed category.")
@click.option("--out", default=".", type=click.Path(file_okay=False), help="Output directory.")
def analyze(sigmas, dts, categories, out):
	"""Write the separation analysis tables as CSV."""
	for path in write_analysis(out, sigmas=sigmas, dts=dts, categories=categories):
		click.echo(path)


@cli.command("simulate")
@click.option("--config", "config_path", type=click.Path(dir_okay=False), help="JSON or XML configuration.")
@click.option("--runs", type=int, help="Runs per policy.")
@click.option("--policy", "policies", help="Comma separated policies, e.g. STANDARD,CANDIDATE2.")
@click.option("--seed", type=int, help="Fleet and noise seed.")
@click.option("--workers", type=int, help="Worker processes.")
@click.option("--out", default=".", type=click.Path(file_okay=False), help="Output directory.")
def simulate(config_path, runs, policies, seed, workers, out):
	"""
	Compare safety-disk policies by Monte Carlo simulation.

	Exits with status 2 when a policy that must stay collision free recorded a MAC.
	"""
	experiment = Experiment(config_path, runs=runs, policies=split_policies(policies), seed=seed, workers=workers)
	report = experiment.run()
	report_path, runs_path = experiment.write(report, out)

	for row in report.summaries:
		median = "n/a" if row["median_time_s"] is None else f"{row['median_time_s']:.2f} s"
		click.echo(
			f"{row['policy']:<15} runs={row['runs']} mac_rate={row['mac_rate']:.4f} "
			f"median_time={median} stalled={row['stalled']}"
		)
	click.echo(report_path)
	click.echo(runs_path)
	return report.exit_code


@cli.command("separation")
@click.option("--airframe", nargs=2, type=float, required=True, help="Airframe diameters of both UAVs (m).")
@click.option("--eps", nargs=2, type=float, default=(0.0, 0.0), help="Localization errors (m).")
@click.option("--speed", nargs=2, type=float, default=(0.0, 0.0), help="Speeds (m/s).")
@click.option("--dt", type=float, default=0.1, show_default=True, help="Broadcast interval (s).")
@click.option("--json", "as_json", is_flag=True, help="Print JSON.")
def separation(airframe, eps, speed, dt, as_json):
	"""Print the pairwise uNMAC breakdown of two UAVs."""
	for name, values in (("--airframe", airframe), ("--eps", eps), ("--speed", speed), ("--dt", (dt,))):
		if any(v < 0 for v in values):
			raise click.BadParameter(f"must be non-negative, got {' '.join(map(str, values))}", param_hint=name)

	try:
		breakdown = pairwise_unmac(airframe[0], airframe[1], eps[0], eps[1], speed[0], speed[1], dt)
		diameters = [unmac_diameter_unknown_dir(a, e, v, dt) for a, e, v in zip(airframe, eps, speed, strict=True)]
	except InvalidParameterError as e:
		raise click.UsageError(str(e))

	if as_json:
		data = {**breakdown.as_dict(), "unmac_diameter": breakdown.unmac_diameter, "uav_diameters": diameters}
		click.echo(json.dumps(data, indent=2))
		return

	click.echo(f"MAC radius:          {breakdown.mac_radius:10.3f} m")
	click.echo(f"Localization term:   {breakdown.loc_term:10.3f} m")
	click.echo(f"Mobility term:       {breakdown.mobility_term:10.3f} m")
	click.echo(f"uNMAC radius:        {breakdown.unmac_radius:10.3f} m")
	for label, diameter in zip(("i", "j"), diameters, strict=True):
		click.echo(f"uNMAC diameter {label}:    {diameter:10.3f} m")


def main(argv=None):
	"""
	Run the command line and map failures to exit codes.

	Returns:
		int: 0 on success, 1 on usage, configuration or I/O errors, 2 on a safety violation.
	"""
	try:
		result = cli.main(args=argv, prog_name=hooks.app_name, standalone_mode=False)
	except click.ClickException as e:
		e.show()
		return 1
	except click.Abort:
		click.echo("Aborted!", err=True)
		return 1
	except UnmacError as e:
		logger.debug("command_failed", exc_info=True)
		click.echo(f"Error: {e!s}", err=True)
		return 1
	return result if isinstance(result, int) else 0


def run():
	sys.exit(main())
