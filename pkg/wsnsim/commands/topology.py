from pathlib import Path
from typing import Optional

import typer

from wsnsim.errors import TopologyError
from wsnsim.network.topology import (
    DEFAULT_RADIO_RANGE_M,
    TOPOLOGY_ROWS,
    generate_topology,
    sninda,
)
from wsnsim.utils.console import console


def dump_topology_command(
    nodes: int = typer.Option(..., "--nodes", "-n", help="Number of sensor nodes."),
    seed: int = typer.Option(1, "--seed", "-s", help="Placement seed."),
    out: Optional[Path] = typer.Option(
        None, "--out", "-o", help="Write to this file instead of stdout."
    ),
    radio_range: float = typer.Option(
        DEFAULT_RADIO_RANGE_M, "--range", help="Nominal radio range in meters."
    ),
    width: Optional[float] = typer.Option(
        None, "--width", help="Field width in meters (default: benchmark row)."
    ),
    height: Optional[float] = typer.Option(
        None, "--height", help="Field height in meters (default: benchmark row)."
    ),
):
    """Print the placement every protocol would see for a node count and seed."""
    row = TOPOLOGY_ROWS.get(nodes)
    width = width if width is not None else (row.width if row else None)
    height = height if height is not None else (row.height if row else None)
    if width is None or height is None:
        console.print(
            f"❌ No benchmark row for {nodes} nodes; pass --width and --height.",
            style="bold red",
        )
        raise typer.Exit(1)
    try:
        topology = generate_topology(nodes, width, height, radio_range, seed)
    except TopologyError as e:
        console.print(f"❌ {e}", style="bold red")
        raise typer.Exit(1)

    if out is None:
        typer.echo(topology.dumps(), nl=False)
        return
    try:
        out.parent.mkdir(parents=True, exist_ok=True)
        topology.dump(out)
    except OSError as e:
        console.print(f"❌ Could not write {out}: {e}", style="bold red")
        raise typer.Exit(1)
    console.print(
        f"✅ {nodes} nodes written to {out} "
        f"(SNINDA {sninda(nodes, width * height, radio_range):.1f}, "
        f"mean degree {topology.mean_degree():.1f})",
        style="green",
    )
