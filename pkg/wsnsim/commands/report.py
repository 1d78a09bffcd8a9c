from pathlib import Path
from typing import Optional

import typer

from wsnsim.commands.sweep import RESULTS_FILENAME
from wsnsim.errors import WsnSimError
from wsnsim.harness.report import comparison_report, render_report, report_text
from wsnsim.harness.results import read_csv
from wsnsim.utils.console import console


def results_file(in_path: Path) -> Path:
    """A sweep directory resolves to its results.csv."""
    if in_path.is_dir():
        return in_path / RESULTS_FILENAME
    return in_path


def report_command(in_path: Path, out: Optional[Path] = None) -> None:
    csv_path = results_file(in_path)
    if not csv_path.exists():
        console.print(f"❌ No results found at {csv_path}", style="bold red")
        raise typer.Exit(1)
    try:
        results = read_csv(csv_path)
        report = comparison_report(results)
    except WsnSimError as e:
        console.print(f"❌ {e}", style="bold red")
        raise typer.Exit(1)
    except (ValueError, KeyError) as e:
        console.print(f"❌ Malformed results file {csv_path}: {e}", style="bold red")
        raise typer.Exit(1)

    skipped = sum(1 for r in results if not r.ok)
    if skipped:
        console.print(
            f"⚠️ Ignoring {skipped} failed run(s) from {csv_path} "
            "and their (nodes, seed) pairs in every protocol",
            style="yellow",
        )
    render_report(report, console)
    if out is not None:
        try:
            out.parent.mkdir(parents=True, exist_ok=True)
            out.write_text(report_text(report))
        except OSError as e:
            console.print(f"❌ Could not write report: {e}", style="bold red")
            raise typer.Exit(1)
        console.print(f"✅ Report written to {out}", style="green")
