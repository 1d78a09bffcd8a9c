from pathlib import Path
from typing import List, Optional

import typer

from . import get_version_string
from .commands.report import report_command
from .commands.simulate import simulate_command
from .commands.studies import beta_sweep_command, cells_command
from .commands.sweep import sweep_command
from .commands.topology import dump_topology_command
from .utils.config_helpers import LOG_LEVEL_ENV_VAR
from .utils.console import configure_logging, console


def version_callback(value: bool):
    """Show version and exit."""
    if value:
        console.print(f"wsnsim version: {get_version_string()}")
        raise typer.Exit()


def main_callback(
    version: bool = typer.Option(
        None,
        "--version",
        callback=version_callback,
        is_eager=True,
        help="Show version and exit.",
    ),
    log_level: Optional[str] = typer.Option(
        None,
        "--log-level",
        "-l",
        help=f"Log verbosity (DEBUG, INFO, ...). Overrides {LOG_LEVEL_ENV_VAR}.",
    ),
):
    """Configure logging before any sub-command runs."""
    configure_logging(log_level)


app = typer.Typer(
    name="wsnsim",
    help="Sensor network data dissemination simulator and benchmark harness",
    add_completion=False,
    callback=main_callback,
    no_args_is_help=True,
)


@app.command()
def simulate(
    scenario: Path = typer.Option(
        ..., "--scenario", help="Scenario file (key=value lines)."
    ),
    seed: Optional[int] = typer.Option(
        None, "--seed", help="Run only this seed instead of the scenario's seed list."
    ),
    trace: Optional[Path] = typer.Option(
        None,
        "--trace",
        help="Write the event trace here (one file per seed when several run).",
    ),
    csv_path: Optional[Path] = typer.Option(
        None, "--csv", help="Also write the results CSV to this file."
    ),
    workers: Optional[int] = typer.Option(
        None, "--workers", "-w", help="Parallel runs (default: logical CPU count)."
    ),
):
    """Run one scenario file and print its metrics."""
    simulate_command(
        scenario, seed=seed, trace_path=trace, csv_path=csv_path, workers=workers
    )


@app.command()
def sweep(
    rows: str = typer.Option(
        "all", "--rows", help="'all' or comma-separated node counts (e.g. 40,80,120)."
    ),
    protocols: str = typer.Option(
        "all", "--protocols", "-p", help="'all' or comma-separated protocol names."
    ),
    seeds: int = typer.Option(10, "--seeds", help="Run seeds 1..N for every row."),
    out: Path = typer.Option(
        Path("results"), "--out", "-o", help="Directory for results.csv and topologies."
    ),
    duration: Optional[float] = typer.Option(
        None, "--duration", help="Simulated seconds per run (default 500)."
    ),
    workers: Optional[int] = typer.Option(
        None, "--workers", "-w", help="Parallel runs (default: logical CPU count)."
    ),
    overrides: Optional[List[str]] = typer.Option(
        None,
        "--set",
        help="Override section.field=value (repeatable, e.g. cbddp.beta=1).",
    ),
):
    """Run protocols over benchmark topology rows and seeds, writing results.csv."""
    sweep_command(
        rows=rows,
        protocols=protocols,
        seeds=seeds,
        out=out,
        duration=duration,
        workers=workers,
        overrides=overrides or (),
    )


@app.command()
def report(
    in_path: Path = typer.Option(
        ..., "--in", help="Sweep output directory or a results CSV file."
    ),
    out: Optional[Path] = typer.Option(
        None, "--out", "-o", help="Also write the report as plain text."
    ),
):
    """Compare protocols from sweep results: rankings, deltas and summary grid."""
    report_command(in_path, out=out)


app.command("dump-topology")(dump_topology_command)
app.command("cells")(cells_command)
app.command("beta-sweep")(beta_sweep_command)


if __name__ == "__main__":
    app()
