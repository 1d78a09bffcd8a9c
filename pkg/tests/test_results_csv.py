import io

from rich.console import Console

from wsnsim.harness.results import (
    CSV_COLUMNS,
    emit_csv,
    parse_csv,
    read_csv,
    results_table,
    write_csv,
)
from wsnsim.metrics import RunResult


def _result(protocol: str, nodes: int, seed: int, **fields) -> RunResult:
    values = dict(
        e_avg_j=0.123456789,
        r_oh=42,
        dr=1.0,
        band_util_pct=0.1 + 0.2,
        duplicates=0,
        sent=250,
        received=250,
        unique=250,
        bytes_per_s=101.5,
        routing_failures=0,
    )
    values.update(fields)
    return RunResult(protocol=protocol, nodes=nodes, seed=seed, **values)


def _csv(results) -> str:
    out = io.StringIO()
    write_csv(results, out)
    return out.getvalue()


def test_empty_results_give_header_only():
    assert _csv([]) == ",".join(CSV_COLUMNS) + "\n"


def test_rows_sorted_by_protocol_nodes_seed():
    results = [
        _result("fdddp", 20, 1),
        _result("cbddp", 40, 1),
        _result("cbddp", 20, 2),
        _result("cbddp", 20, 1),
    ]
    lines = _csv(results).splitlines()
    assert len(lines) == 5
    keys = [tuple(line.split(",")[:3]) for line in lines[1:]]
    assert keys == [
        ("cbddp", "20", "1"),
        ("cbddp", "20", "2"),
        ("cbddp", "40", "1"),
        ("fdddp", "20", "1"),
    ]


def test_floats_survive_a_round_trip():
    results = [_result("cbddp", 20, 1), _result("dddp", 20, 1, dr=0.96)]
    parsed = parse_csv(io.StringIO(_csv(results)))
    assert parsed == results
    assert parsed[0].band_util_pct == 0.1 + 0.2


def test_failed_runs_have_empty_metric_cells(tmp_path):
    failed_run = RunResult.failed("eagddp", 160, 3)
    path = emit_csv([failed_run], tmp_path / "out" / "results.csv")
    lines = path.read_text().splitlines()
    assert lines[1] == "eagddp,160,3" + "," * 11 + "failed"
    (failed,) = read_csv(path)
    assert not failed.ok
    assert failed.r_oh is None
    assert failed.unique_fraction is None


def test_results_table_marks_failures():
    table = results_table([_result("cbddp", 20, 1), RunResult.failed("dddp", 20, 1)])
    console = Console(record=True, width=160, file=io.StringIO())
    console.print(table)
    text = console.export_text()
    assert "CBDDP" in text
    assert "failed" in text
    assert table.row_count == 2
