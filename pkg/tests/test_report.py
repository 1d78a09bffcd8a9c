import io

import pytest
from rich.console import Console

from wsnsim.errors import ReportError
from wsnsim.harness.report import (
    comparison_report,
    percent_difference,
    qualitative_grid,
    render_report,
    report_text,
)
from wsnsim.metrics import RunResult


def _run(protocol: str, seed: int, r_oh: int, nodes: int = 20, **fields) -> RunResult:
    values = dict(
        e_avg_j=0.5,
        dr=1.0,
        band_util_pct=0.2,
        duplicates=0,
        sent=100,
        received=100,
        unique=100,
        bytes_per_s=10.0,
        routing_failures=0,
    )
    values.update(fields)
    return RunResult(
        protocol=protocol, nodes=nodes, seed=seed, r_oh=r_oh, **values
    )


def _three_protocols():
    overheads = {"cbddp": 10, "fdddp": 100, "dddp": 180}
    return [
        _run(protocol, seed, r_oh)
        for protocol, r_oh in overheads.items()
        for seed in (1, 2)
    ]


def test_percent_difference():
    assert percent_difference(10, 180) == pytest.approx(-94.444, abs=1e-3)
    assert percent_difference(150, 100) == pytest.approx(50.0)
    assert percent_difference(1, 0) is None


def test_deltas_rankings_and_grid():
    report = comparison_report(_three_protocols())
    assert report.protocols == ("cbddp", "dddp", "fdddp")
    assert report.runs == ((20, 1), (20, 2))

    delta = report.delta("r_oh", "cbddp", "dddp")
    assert delta.describe() == "CBDDP 94.4% smaller than DDDP"
    delta = report.delta("r_oh", "dddp", "fdddp")
    assert delta.describe() == "DDDP 80.0% larger than FDDDP"

    assert report.rankings["r_oh"] == (("cbddp",), ("fdddp",), ("dddp",))
    assert report.grid["r_oh"] == {"cbddp": "Best", "fdddp": "Average", "dddp": "Worst"}
    assert report.stats["r_oh"]["cbddp"].mean == 10
    assert report.stats["r_oh"]["cbddp"].std == 0


def test_equal_means_tie():
    report = comparison_report(_three_protocols())
    assert report.rankings["dr"] == (("cbddp", "dddp", "fdddp"),)
    assert report.grid["dr"] == {p: "Tie" for p in ("cbddp", "dddp", "fdddp")}
    assert report.delta("dr", "cbddp", "dddp").describe() == "CBDDP equal to DDDP"


def test_delivery_ratio_ranks_by_distance_from_one():
    results = [
        _run("cbddp", 1, 10, dr=1.6),
        _run("dddp", 1, 10, dr=0.9),
        _run("fdddp", 1, 10, dr=1.0),
    ]
    report = comparison_report(results)
    assert report.rankings["dr"] == (("fdddp",), ("dddp",), ("cbddp",))


def test_grid_with_shared_tiers():
    grid = qualitative_grid({"r_oh": (("a", "b"), ("c",))})
    assert grid == {"r_oh": {"a": "Best", "b": "Best", "c": "Worst"}}


def test_single_protocol_has_no_deltas_or_grid():
    report = comparison_report([_run("cbddp", 1, 10), _run("cbddp", 2, 12)])
    assert report.deltas == ()
    assert report.grid == {}
    assert report.stats["r_oh"]["cbddp"].mean == 11


def test_mismatched_seed_sets_are_rejected():
    results = _three_protocols() + [_run("cbddp", 3, 10)]
    with pytest.raises(ReportError, match="different"):
        comparison_report(results)


def test_failed_runs_drop_their_pair_from_every_protocol():
    results = _three_protocols() + [
        _run("cbddp", 3, 10),
        _run("fdddp", 3, 100),
        RunResult.failed("dddp", 20, 3),
    ]
    report = comparison_report(results)
    assert report.runs == ((20, 1), (20, 2))
    assert {stat.n for stat in report.stats["r_oh"].values()} == {2}
    with pytest.raises(ReportError):
        comparison_report([RunResult.failed("dddp", 20, 3)])


def test_seed_that_failed_for_one_protocol_leaves_the_comparison():
    # cbddp finished seed 3, dddp attempted it and failed
    results = [r for r in _three_protocols() if r.protocol != "fdddp"] + [
        _run("cbddp", 3, 10),
        RunResult.failed("dddp", 20, 3),
    ]
    report = comparison_report(results)
    assert report.protocols == ("cbddp", "dddp")
    assert report.runs == ((20, 1), (20, 2))
    results.append(_run("fdddp", 1, 100))
    with pytest.raises(ReportError, match="different"):
        comparison_report(results)


def test_per_row_means():
    results = [
        _run(p, 1, r_oh, nodes=nodes)
        for nodes, scale in ((20, 1), (40, 2))
        for p, r_oh in (("cbddp", 10 * scale), ("fdddp", 50 * scale))
    ]
    report = comparison_report(results)
    assert report.by_nodes["r_oh"] == {
        20: {"cbddp": 10.0, "fdddp": 50.0},
        40: {"cbddp": 20.0, "fdddp": 100.0},
    }


def test_rendered_report_text():
    report = comparison_report(_three_protocols())
    text = report_text(report)
    assert "Routing overhead: CBDDP < FDDDP < DDDP" in text
    assert "CBDDP 94.4% smaller than DDDP" in text
    assert "Summary of protocols" in text

    console = Console(record=True, width=120, file=io.StringIO())
    render_report(report, console)
    assert console.export_text() == text
