#!/usr/bin/env python3
"""
paraconcave command line.

Exit status: 0 when every check behaves as predicted, 1 when a check
deviates, 2 on invalid input or a numerical failure.
"""
import json
import logging
import sys
from typing import Optional

import click
from pythonjsonlogger import jsonlogger

from paraconcave import __version__
from paraconcave.errors import ParaconcaveError
from paraconcave.exponents import TheoremInputs, predict as predict_exponents
from paraconcave.means import format_exponent
from paraconcave.scenario import run_scenario, run_suite
from paraconcave.scenarios import SCENARIO_DIR, resolve_scenario

logger = logging.getLogger(__name__)

EXIT_DEVIATION = 1
EXIT_ERROR = 2


def setup_logging(level: str = "INFO", fmt: str = "text"):
    """Setup logging configuration"""
    handler = logging.StreamHandler()
    if fmt == "json":
        handler.setFormatter(jsonlogger.JsonFormatter("%(asctime)s %(name)s %(levelname)s %(message)s"))
    else:
        handler.setFormatter(logging.Formatter("%(asctime)s - %(name)s - %(levelname)s - %(message)s"))
    logging.basicConfig(level=getattr(logging, level.upper()), handlers=[handler], force=True)


def _fail(e: ParaconcaveError):
    click.echo(f"error: {e}", err=True)
    sys.exit(EXIT_ERROR)


@click.group()
@click.option("--log-level", "-l", default="WARNING",
              type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False), help="Logging level")
@click.option("--log-format", default="text", type=click.Choice(["text", "json"]), help="Log record format")
def cli(log_level, log_format):
    """Solve parabolic problems on convex domains and test power concavity of the solutions."""
    setup_logging(log_level, log_format)


@cli.command()
@click.argument("scenario")
@click.option("--seed", type=int, default=None, help="Override the scenario seed")
@click.option("--out", type=click.Path(file_okay=False), default=None, help="Output directory")
@click.option("--tolerance-scale", type=float, default=1.0, show_default=True,
              help="Multiplier for the certification tolerance constant")
def run(scenario, seed: Optional[int], out: Optional[str], tolerance_scale: float):
    """Run one scenario (a file path or a bundled scenario name)."""
    try:
        record = run_scenario(resolve_scenario(scenario), seed=seed, out=out, tolerance_scale=tolerance_scale)
    except ParaconcaveError as e:
        _fail(e)

    for result in record.results:
        verdict = "pass" if result.passed else "fail"
        expected = "fail" if result.sharpness else "pass"
        mark = "✓" if result.as_predicted else "✗"
        click.echo(f"{mark} {result.name:<24} {result.kind:<18} {verdict} (expected {expected})")
    click.echo(f"{record.config['name']}: {'ok' if record.passed else 'DEVIATION'} "
               f"in {record.wall_time:.1f}s -> {record.output_dir}")
    sys.exit(0 if record.passed else EXIT_DEVIATION)


@cli.command()
@click.argument("directory", type=click.Path(exists=True, file_okay=False), default=str(SCENARIO_DIR))
@click.option("--parallel", "-j", type=click.IntRange(min=1), default=1, show_default=True,
              help="Number of scenarios run at once")
@click.option("--seed", type=int, default=None, help="Override every scenario seed")
@click.option("--out", type=click.Path(file_okay=False), default=None, help="Output directory")
@click.option("--tolerance-scale", type=float, default=1.0, show_default=True,
              help="Multiplier for the certification tolerance constant")
def suite(directory, parallel: int, seed: Optional[int], out: Optional[str], tolerance_scale: float):
    """Run every scenario in DIRECTORY (default: the bundled suite)."""
    try:
        report = run_suite(directory, parallel, seed=seed, out=out, tolerance_scale=tolerance_scale)
    except ParaconcaveError as e:
        _fail(e)
    for row in report.table():
        click.echo(row)
    sys.exit(0 if report.passed else EXIT_DEVIATION)


@cli.command()
@click.option("--q", "q", default="inf", show_default=True, help="Source concavity exponent (>= 1 or inf)")
@click.option("--gamma", type=float, default=0.0, show_default=True, help="Growth exponent of the source")
@click.option("--n", "n", type=click.IntRange(min=1), default=1, show_default=True, help="Dimension")
@click.option("--p", "p", default=None, help="Solution concavity exponent for the energy relation")
@click.option("--m", "m", type=float, default=1.0, show_default=True, help="Energy power")
@click.option("--json", "as_json", is_flag=True, help="Print JSON instead of a table")
def predict(q, gamma, n, p, m, as_json):
    """Print every closed-form exponent for the given inputs."""
    try:
        rows = predict_exponents(TheoremInputs(q=q, gamma=gamma, n=n, p=p, m=m))
    except ParaconcaveError as e:
        _fail(e)
    if as_json:
        click.echo(json.dumps([row.to_dict() for row in rows], indent=2))
        return
    for row in rows:
        value = format_exponent(row.value) if isinstance(row.value, float) else row.value
        if isinstance(value, float):
            value = f"{value:.6g}"
        click.echo(f"{row.name:<32} {value!s:<12} {row.relation}")


@cli.command()
def version():
    """Print the package version."""
    click.echo(__version__)


def main():
    """Main entry point"""
    cli()


if __name__ == "__main__":
    main()
