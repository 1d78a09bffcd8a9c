"""Single-topology parameter studies: DDDP cell count and CBDDP credit."""

from typing import List, Optional, Sequence, Tuple

import typer
from rich.table import Table

from wsnsim.commands.sweep import sweep_settings
from wsnsim.errors import WsnSimError
from wsnsim.harness.runner import RunOutcome, run_single
from wsnsim.harness.scenario import Scenario
from wsnsim.metrics import transmissions_by_kind
from wsnsim.network.topology import Topology
from wsnsim.protocols.dddp import factor_cells
from wsnsim.protocols.packets import PacketKind
from wsnsim.utils.console import console


def _parse_list(text: str, parse, what: str) -> Tuple:
    try:
        values = tuple(parse(part) for part in text.replace(" ", "").split(",") if part)
    except ValueError:
        raise typer.BadParameter(f"invalid {what} list {text!r}") from None
    if not values:
        raise typer.BadParameter(f"empty {what} list")
    return values


def _study_runs(
    protocol: str,
    nodes: int,
    seed: int,
    duration: Optional[float],
    overrides: Sequence[dict],
) -> List[RunOutcome]:
    """One traced run per override set, all on the same placement."""
    outcomes = []
    topology: Optional[Topology] = None
    for override in overrides:
        settings = sweep_settings(override, duration)
        scenario = Scenario.for_row(protocol, nodes, seeds=(seed,), settings=settings)
        if topology is None:
            topology = scenario.topology(seed)
        outcomes.append(run_single(scenario, seed, topology=topology, trace=True))
    return outcomes


def cell_study(
    nodes: int, seed: int, cell_counts: Sequence[int], duration: Optional[float] = None
) -> List[Tuple[int, RunOutcome]]:
    outcomes = _study_runs(
        "dddp",
        nodes,
        seed,
        duration,
        [{"dddp.cells": str(count)} for count in cell_counts],
    )
    return list(zip(cell_counts, outcomes))


def beta_study(
    nodes: int, seed: int, betas: Sequence[float], duration: Optional[float] = None
) -> List[Tuple[float, RunOutcome]]:
    outcomes = _study_runs(
        "cbddp",
        nodes,
        seed,
        duration,
        [{"cbddp.beta": repr(beta)} for beta in betas],
    )
    return list(zip(betas, outcomes))


def _fmt(value: Optional[float], spec: str) -> str:
    return "-" if value is None else format(value, spec)


def cells_command(
    nodes: int = typer.Option(40, "--nodes", "-n", help="Benchmark row (node count)."),
    seed: int = typer.Option(1, "--seed", "-s", help="Placement and run seed."),
    cells: str = typer.Option(
        "1,4,9,16", "--cells", "-c", help="Comma-separated DDDP cell counts."
    ),
    duration: Optional[float] = typer.Option(
        None, "--duration", help="Simulated seconds per run."
    ),
):
    """DDDP routing overhead and query flooding over cell counts on one topology."""
    cell_counts = _parse_list(cells, int, "cell count")
    try:
        study = cell_study(nodes, seed, cell_counts, duration)
    except (WsnSimError, ValueError) as e:
        console.print(f"❌ {e}", style="bold red")
        raise typer.Exit(1)

    table = Table(
        title=f"DDDP cell study, {nodes} nodes, seed {seed}", header_style="bold blue"
    )
    columns = (
        "Cells",
        "Grid",
        "R_OH",
        "Query tx",
        "Construction tx",
        "E_avg (J)",
        "Dr",
    )
    for column in columns:
        table.add_column(column, justify="right")
    failed = 0
    for count, outcome in study:
        rows, cols = factor_cells(count)
        result = outcome.result
        if not result.ok:
            failed += 1
            table.add_row(
                str(count), f"{rows}×{cols}", "[bold red]failed[/bold red]", *["-"] * 4
            )
            continue
        by_kind = transmissions_by_kind(outcome.runtime.sim.trace)
        table.add_row(
            str(count),
            f"{rows}×{cols}",
            str(result.r_oh),
            str(by_kind[PacketKind.QUERY.value]),
            str(by_kind[PacketKind.CELL_CONSTRUCTION.value]),
            _fmt(result.e_avg_j, ".4g"),
            _fmt(result.dr, ".3f"),
        )
    console.print(table)
    if failed:
        console.print(f"❌ {failed} run(s) failed", style="bold red")
        raise typer.Exit(1)


def beta_sweep_command(
    nodes: int = typer.Option(40, "--nodes", "-n", help="Benchmark row (node count)."),
    seed: int = typer.Option(1, "--seed", "-s", help="Placement and run seed."),
    betas: str = typer.Option(
        "0,0.25,0.5,1.0", "--betas", "-b", help="Comma-separated CBDDP credit values."
    ),
    duration: Optional[float] = typer.Option(
        None, "--duration", help="Simulated seconds per run."
    ),
):
    """CBDDP duplicate deliveries and overhead over the credit β on one topology."""
    beta_values = _parse_list(betas, float, "beta")
    try:
        study = beta_study(nodes, seed, beta_values, duration)
    except (WsnSimError, ValueError) as e:
        console.print(f"❌ {e}", style="bold red")
        raise typer.Exit(1)

    table = Table(
        title=f"CBDDP credit study, {nodes} nodes, seed {seed}",
        header_style="bold blue",
    )
    for column in ("β", "Duplicates", "Dr", "Data tx", "R_OH", "E_avg (J)"):
        table.add_column(column, justify="right")
    failed = 0
    for beta, outcome in study:
        result = outcome.result
        if not result.ok:
            failed += 1
            table.add_row(f"{beta:g}", "[bold red]failed[/bold red]", *["-"] * 4)
            continue
        by_kind = transmissions_by_kind(outcome.runtime.sim.trace)
        table.add_row(
            f"{beta:g}",
            str(result.duplicates),
            _fmt(result.dr, ".3f"),
            str(by_kind[PacketKind.DATA.value]),
            str(result.r_oh),
            _fmt(result.e_avg_j, ".4g"),
        )
    console.print(table)
    if failed:
        console.print(f"❌ {failed} run(s) failed", style="bold red")
        raise typer.Exit(1)
