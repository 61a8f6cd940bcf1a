"""
Command-line front end.

Exit codes: 0 success, 2 configuration error, 3 numerical error, 4 I/O error.
"""

import functools
import logging
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

import click
import pandas as pd
from pydantic import ValidationError

from config import LOG_LEVEL
from errors import ConfigurationError, SimulationError
from memory.technologies import list_technologies
from simulation import experiments, reporting
from simulation.engine import TRACE_FIELDS, Simulation
from simulation.settings import RunConfig, load_config, load_preset, preset_names

logger = logging.getLogger(__name__)

IO_EXIT_CODE = 4


def _fail(category: str, message: str, code: int) -> None:
    click.echo(f"error[{category}]: {message}", err=True)
    sys.exit(code)


def handle_errors(func):
    """Map exceptions to category-coded diagnostics and exit codes."""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except SimulationError as e:
            _fail(e.category, str(e), e.exit_code)
        except (ValidationError, ValueError) as e:
            _fail(ConfigurationError.category, str(e), ConfigurationError.exit_code)
        except OSError as e:
            _fail("io", str(e), IO_EXIT_CODE)

    return wrapper


def _load(config_path: Optional[str], preset: Optional[str], seed: Optional[int]) -> RunConfig:
    if config_path and preset:
        raise ConfigurationError("Use either --config or --preset, not both")
    if config_path:
        config = load_config(config_path)
    elif preset:
        config = load_preset(preset)
    else:
        config = RunConfig()
    if seed is not None:
        config = config.model_copy(update={"seed": seed})
    return config.resolve_seed()


def config_options(func):
    func = click.option("--seed", type=int, default=None, help="Override the configured seed.")(func)
    func = click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None,
                        help="Output directory (default: $PAIRVERIFY_OUTPUT_DIR or ./results).")(func)
    func = click.option("--preset", type=click.Choice(preset_names()), default=None,
                        help="Use a shipped preset.")(func)
    func = click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None,
                        help="YAML configuration file.")(func)
    return func


def workers_option(func):
    return click.option("--workers", type=int, default=1, show_default=True,
                        help="Parallel worker processes for sweeps.")(func)


def _write_experiment(name: str, frame, config: RunConfig, out_dir: Optional[str], columns, results=None) -> Path:
    when = datetime.now(timezone.utc)
    directory = reporting.output_dir(out_dir)
    csv_path = reporting.write_csv(
        frame, directory / reporting.experiment_filename(name, config.seed, when), columns
    )
    reporting.write_summary(
        directory / reporting.experiment_filename(name, config.seed, when, suffix=".json"),
        name, config.model_dump(mode="json"), results=results, files=[csv_path],
    )
    return csv_path


@click.group()
@click.option("--log-level", default=LOG_LEVEL, show_default=True, help="Logging verbosity.")
def cli(log_level: str):
    """Entangled-pair distribution and verification simulator."""
    logging.basicConfig(
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        level=getattr(logging, log_level.upper(), logging.INFO),
    )


@cli.command("run")
@config_options
@click.option("--trace", is_flag=True, help="Also write the full event trace.")
@handle_errors
def run_command(config_path, preset, out_dir, seed, trace):
    """Run one simulation and write its report."""
    config = _load(config_path, preset, seed)
    simulation = Simulation(config, trace=trace)
    report = simulation.run()

    when = datetime.now(timezone.utc)
    directory = reporting.output_dir(out_dir)
    files = [reporting.write_csv(
        pd.DataFrame([report.to_row()]), directory / reporting.experiment_filename("run", config.seed, when)
    )]
    if trace:
        files.append(reporting.write_rows(
            simulation.trace_rows, directory / reporting.experiment_filename("trace", config.seed, when), TRACE_FIELDS
        ))
    reporting.write_summary(
        directory / reporting.experiment_filename("run", config.seed, when, suffix=".json"),
        "run", report.config_echo, results=report.to_dict(), files=files,
    )
    click.echo(
        f"pair {report.pair_label}: emitted {report.emitted}, verified {report.verified} "
        f"({report.verified_rate_hz:.6g} pairs/s), timeout {report.timeout_s:.6g} s"
    )
    click.echo(f"wrote {files[0]}")


@cli.command("fidelity-curve")
@config_options
@handle_errors
def fidelity_curve_command(config_path, preset, out_dir, seed):
    """Fidelity vs classical latency for each memory technology."""
    config = _load(config_path, preset, seed)
    frame = experiments.fidelity_curve_from_config(config)
    path = _write_experiment(
        "fidelity-curve", frame, config, out_dir, experiments.FIDELITY_CURVE_COLUMNS,
        results={"threshold": config.protocol.fidelity_threshold},
    )
    click.echo(f"wrote {path}")


@cli.command("buffer-sweep")
@config_options
@workers_option
@handle_errors
def buffer_sweep_command(config_path, preset, out_dir, seed, workers):
    """Buffer occupancy vs constant classical latency per node pair."""
    config = _load(config_path, preset, seed)
    frame = experiments.buffer_sweep(config, max_workers=workers)
    path = _write_experiment("buffer-sweep", frame, config, out_dir, experiments.BUFFER_SWEEP_COLUMNS)
    click.echo(f"wrote {path}")


@cli.command("rate-sweep")
@config_options
@workers_option
@handle_errors
def rate_sweep_command(config_path, preset, out_dir, seed, workers):
    """Verified-pair rate and timeout vs fidelity threshold."""
    config = _load(config_path, preset, seed)
    frame = experiments.rate_vs_timeout(config, max_workers=workers)
    path = _write_experiment("rate-sweep", frame, config, out_dir, experiments.RATE_SWEEP_COLUMNS)
    click.echo(f"wrote {path}")


@cli.command("list-technologies")
def list_technologies_command():
    """Print the built-in memory technology catalog."""
    click.echo(f"{'name':<14}{'T1 (s)':>12}{'T2 (s)':>12}  platform")
    for tech in list_technologies():
        click.echo(f"{tech.name:<14}{tech.t1_s:>12g}{tech.t2_s:>12g}  {tech.label}")


@cli.command("validate-config")
@click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None)
@click.option("--preset", type=click.Choice(preset_names()), default=None)
@handle_errors
def validate_config_command(config_path, preset):
    """Check a configuration file or preset without running it."""
    if not config_path and not preset:
        raise ConfigurationError("validate-config needs --config or --preset")
    config = _load(config_path, preset, None)
    click.echo(
        f"ok: {config_path or preset} (pair {config.topology.pair_under_test}, "
        f"technology {config.technology().name}, timeout {config.timeout_s():.6g} s)"
    )


def main():
    cli(prog_name="pairverify")


if __name__ == "__main__":
    main()
