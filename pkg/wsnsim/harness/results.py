"""CSV contract for run results: one row per run, sorted by (protocol, nodes, seed)."""

import csv
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, TextIO, Union

from rich.table import Table

from wsnsim.metrics import RunResult

CSV_COLUMNS = (
    "protocol",
    "nodes",
    "seed",
    "e_avg_j",
    "r_oh",
    "dr",
    "band_util_pct",
    "duplicates",
    "sent",
    "received",
    "unique",
    "bytes_per_s",
    "routing_failures",
    "status",
)
_INT_COLUMNS = {
    "nodes",
    "seed",
    "r_oh",
    "duplicates",
    "sent",
    "received",
    "unique",
    "routing_failures",
}
_FLOAT_COLUMNS = {"e_avg_j", "dr", "band_util_pct", "bytes_per_s"}


def _cell(value: object) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        # repr round-trips exactly
        return repr(value)
    return str(value)


def write_csv(results: Iterable[RunResult], out: TextIO) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for result in sorted(results, key=lambda r: r.sort_key):
        row = result.model_dump()
        writer.writerow([_cell(row[column]) for column in CSV_COLUMNS])


def emit_csv(results: Iterable[RunResult], path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        write_csv(results, f)
    return path


def _parse(column: str, text: str) -> Optional[object]:
    if text == "":
        return None
    if column in _INT_COLUMNS:
        return int(text)
    if column in _FLOAT_COLUMNS:
        return float(text)
    return text


def parse_csv(lines: Iterable[str]) -> List[RunResult]:
    reader = csv.DictReader(lines)
    results = []
    for row in reader:
        fields = {column: _parse(column, row.get(column, "")) for column in CSV_COLUMNS}
        fields = {k: v for k, v in fields.items() if v is not None}
        results.append(RunResult(**fields))
    return results


def read_csv(path: Union[str, Path]) -> List[RunResult]:
    with open(path, newline="") as f:
        return parse_csv(f)


def _fmt(value: Optional[float], spec: str) -> str:
    return "-" if value is None else format(value, spec)


def results_table(results: Sequence[RunResult], title: str = "Run results") -> Table:
    table = Table(title=title, header_style="bold blue")
    table.add_column("Protocol", style="magenta")
    for column in ("Nodes", "Seed", "E_avg (J)", "R_OH", "Dr", "Band util (%)", "Dup"):
        table.add_column(column, justify="right")
    table.add_column("Status", justify="center")
    for result in sorted(results, key=lambda r: r.sort_key):
        status = "✅" if result.ok else "[bold red]❌ failed[/bold red]"
        table.add_row(
            result.protocol.upper(),
            str(result.nodes),
            str(result.seed),
            _fmt(result.e_avg_j, ".4g"),
            "-" if result.r_oh is None else str(result.r_oh),
            _fmt(result.dr, ".3f"),
            _fmt(result.band_util_pct, ".4g"),
            "-" if result.duplicates is None else str(result.duplicates),
            status,
        )
    return table
