from typer.testing import CliRunner

from tests.helpers import line_topology
from wsnsim.cli import app
from wsnsim.harness.results import read_csv
from wsnsim.network.topology import generate_topology

runner = CliRunner()


def _scenario(tmp_path, text: str):
    (tmp_path / "line.txt").write_text(line_topology().dumps())
    path = tmp_path / "run.scn"
    path.write_text(text)
    return path


def test_help_lists_commands():
    result = runner.invoke(app, ["--help"])
    assert result.exit_code == 0
    commands = ("simulate", "sweep", "report", "dump-topology", "cells", "beta-sweep")
    for command in commands:
        assert command in result.output


def test_version():
    result = runner.invoke(app, ["--version"])
    assert result.exit_code == 0
    assert "wsnsim version:" in result.output


def test_dump_topology_to_stdout():
    result = runner.invoke(app, ["dump-topology", "--nodes", "20", "--seed", "1"])
    assert result.exit_code == 0
    assert result.stdout == generate_topology(20, 340, 340, 271.3, seed=1).dumps()


def test_dump_topology_to_file(tmp_path):
    out = tmp_path / "n40.txt"
    result = runner.invoke(
        app, ["dump-topology", "-n", "40", "-s", "3", "-o", str(out)]
    )
    assert result.exit_code == 0
    assert "✅" in result.output
    assert out.read_text() == generate_topology(40, 511, 511, 271.3, seed=3).dumps()


def test_dump_topology_needs_field_for_unknown_row():
    result = runner.invoke(app, ["dump-topology", "--nodes", "33"])
    assert result.exit_code == 1
    assert "❌" in result.output
    result = runner.invoke(
        app, ["dump-topology", "--nodes", "33", "--width", "300", "--height", "300"]
    )
    assert result.exit_code == 0


def test_simulate_writes_csv_and_traces(tmp_path):
    scenario = _scenario(
        tmp_path, "protocol=fdddp\ntopology=line.txt\nseeds=1,2\nduration_s=10\n"
    )
    csv_path = tmp_path / "out.csv"
    trace = tmp_path / "trace.txt"
    result = runner.invoke(
        app,
        [
            "simulate",
            "--scenario",
            str(scenario),
            "--csv",
            str(csv_path),
            "--trace",
            str(trace),
        ],
    )
    assert result.exit_code == 0, result.output
    results = read_csv(csv_path)
    assert [(r.protocol, r.nodes, r.seed) for r in results] == [
        ("fdddp", 3, 1),
        ("fdddp", 3, 2),
    ]
    assert all(r.ok and r.sent == 5 for r in results)
    for seed in (1, 2):
        lines = (tmp_path / f"trace.seed{seed}.txt").read_text().splitlines()
        assert any(line.endswith("\ttx") for line in lines)
    assert not trace.exists()


def test_simulate_single_seed_override(tmp_path):
    scenario = _scenario(tmp_path, "protocol=cbddp\ntopology=line.txt\nduration_s=10\n")
    csv_path = tmp_path / "out.csv"
    result = runner.invoke(
        app,
        [
            "simulate",
            "--scenario",
            str(scenario),
            "--seed",
            "7",
            "--csv",
            str(csv_path),
        ],
    )
    assert result.exit_code == 0, result.output
    (only,) = read_csv(csv_path)
    assert only.seed == 7
    assert only.received == only.sent == 5


def test_simulate_bad_scenario_exits_nonzero(tmp_path):
    scenario = _scenario(tmp_path, "protocol=xyz\nnodes=20\n")
    result = runner.invoke(app, ["simulate", "--scenario", str(scenario)])
    assert result.exit_code == 1
    assert "line 1" in result.output


def test_sweep_then_report(tmp_path):
    out = tmp_path / "sweep"
    result = runner.invoke(
        app,
        [
            "sweep",
            "--rows", "20",
            "--protocols", "cbddp,fdddp",
            "--seeds", "2",
            "--duration", "20",
            "--workers", "1",
            "--out", str(out),
        ],
    )
    assert result.exit_code == 0, result.output
    lines = (out / "results.csv").read_text().splitlines()
    assert len(lines) == 5
    assert sorted(p.name for p in (out / "topologies").iterdir()) == [
        "n20_s1.txt",
        "n20_s2.txt",
    ]

    report_path = tmp_path / "report.txt"
    result = runner.invoke(app, ["report", "--in", str(out), "--out", str(report_path)])
    assert result.exit_code == 0, result.output
    text = report_path.read_text()
    assert "Routing overhead:" in text
    assert "Summary of protocols" in text


def test_sweep_rejects_bad_arguments(tmp_path):
    for args in (
        ["--seeds", "0"],
        ["--rows", "33"],
        ["--protocols", "flood"],
        ["--set", "cbddp.gamma=1"],
        ["--set", "beta"],
    ):
        result = runner.invoke(app, ["sweep", "--out", str(tmp_path), *args])
        assert result.exit_code == 1, args
        assert "❌" in result.output


def test_report_without_results(tmp_path):
    result = runner.invoke(app, ["report", "--in", str(tmp_path)])
    assert result.exit_code == 1
    assert "No results found" in result.output


def test_cell_and_beta_studies():
    result = runner.invoke(
        app, ["cells", "--nodes", "20", "--cells", "1,4", "--duration", "20"]
    )
    assert result.exit_code == 0, result.output
    result = runner.invoke(
        app, ["beta-sweep", "--nodes", "20", "--betas", "0,1", "--duration", "20"]
    )
    assert result.exit_code == 0, result.output


def test_study_rejects_malformed_list():
    result = runner.invoke(app, ["beta-sweep", "--betas", "a,b"])
    assert result.exit_code != 0
