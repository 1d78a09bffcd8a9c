from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import typer
from pydantic import ValidationError

from wsnsim.errors import ScenarioError, WsnSimError
from wsnsim.harness.results import emit_csv, results_table
from wsnsim.harness.runner import default_workers, run_experiment
from wsnsim.harness.scenario import Scenario
from wsnsim.metrics import RunResult
from wsnsim.network.topology import TOPOLOGY_ROWS
from wsnsim.protocols.registry import PROTOCOL_NAMES
from wsnsim.utils.console import console, get_logger
from wsnsim.utils.settings_models import RunSettings

log = get_logger(__name__)

RESULTS_FILENAME = "results.csv"
TOPOLOGY_DIRNAME = "topologies"


def parse_rows(text: str) -> Tuple[int, ...]:
    """`all` or a comma list of benchmark node counts."""
    if text.strip().lower() == "all":
        return tuple(TOPOLOGY_ROWS)
    rows = []
    for part in text.replace(" ", "").split(","):
        if not part:
            continue
        try:
            nodes = int(part)
        except ValueError:
            raise ScenarioError(f"invalid row {part!r}") from None
        if nodes not in TOPOLOGY_ROWS:
            raise ScenarioError(
                f"no benchmark row for {nodes} nodes "
                f"(known: {', '.join(map(str, TOPOLOGY_ROWS))})"
            )
        rows.append(nodes)
    if not rows:
        raise ScenarioError("no topology rows selected")
    return tuple(dict.fromkeys(rows))


def parse_protocols(text: str) -> Tuple[str, ...]:
    if text.strip().lower() == "all":
        return PROTOCOL_NAMES
    names = [p for p in text.replace(" ", "").lower().split(",") if p]
    for name in names:
        if name not in PROTOCOL_NAMES:
            raise ScenarioError(
                f"unknown protocol {name!r} (known: {', '.join(PROTOCOL_NAMES)})"
            )
    if not names:
        raise ScenarioError("no protocols selected")
    return tuple(dict.fromkeys(names))


def parse_overrides(assignments: Sequence[str]) -> Dict[str, Optional[str]]:
    overrides: Dict[str, Optional[str]] = {}
    for assignment in assignments:
        key, sep, value = assignment.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or "." not in key:
            raise ScenarioError(
                f"--set expects section.field=value, got {assignment!r}"
            )
        overrides[key] = None if value.lower() in ("none", "null", "") else value
    return overrides


def sweep_settings(
    overrides: Dict[str, Optional[str]], duration: Optional[float] = None
) -> RunSettings:
    if duration is not None:
        overrides = {**overrides, "simulation.duration_s": str(duration)}
    try:
        return RunSettings().with_overrides(overrides)
    except KeyError as e:
        raise ScenarioError(f"unknown setting {e.args[0]!r}") from None
    except ValidationError as e:
        error = e.errors()[0]
        key = ".".join(str(part) for part in error["loc"])
        raise ScenarioError(f"{key}: {error['msg']}") from None


def sweep_scenarios(
    rows: Sequence[int],
    protocols: Sequence[str],
    seeds: Sequence[int],
    settings: RunSettings,
) -> List[Scenario]:
    return [
        Scenario.for_row(protocol, nodes, seeds=seeds, settings=settings)
        for protocol in protocols
        for nodes in rows
    ]


def dump_topologies(scenarios: Sequence[Scenario], out_dir: Path) -> int:
    """Write each (row, seed) placement once; every protocol runs on that file."""
    out_dir.mkdir(parents=True, exist_ok=True)
    written = set()
    for scenario in scenarios:
        for seed in scenario.seeds:
            key = (scenario.nodes, seed)
            if key in written:
                continue
            scenario.topology(seed).dump(out_dir / f"n{scenario.nodes}_s{seed}.txt")
            written.add(key)
    return len(written)


def sweep_command(
    rows: str = "all",
    protocols: str = "all",
    seeds: int = 10,
    out: Path = Path("results"),
    duration: Optional[float] = None,
    workers: Optional[int] = None,
    overrides: Sequence[str] = (),
) -> List[RunResult]:
    if seeds < 1:
        console.print("❌ --seeds must be at least 1", style="bold red")
        raise typer.Exit(1)
    try:
        scenarios = sweep_scenarios(
            parse_rows(rows),
            parse_protocols(protocols),
            tuple(range(1, seeds + 1)),
            sweep_settings(parse_overrides(overrides), duration),
        )
        placements = dump_topologies(scenarios, out / TOPOLOGY_DIRNAME)
        job_count = sum(len(s.seeds) for s in scenarios)
        workers = workers or default_workers(job_count)
        console.print(
            f"🚀 Running {job_count} simulations over {placements} placement(s) "
            f"on {workers} worker(s)",
            style="bold cyan",
        )

        def progress(result: RunResult) -> None:
            if not result.ok:
                console.print(
                    f"⚠️ {result.protocol.upper()} nodes={result.nodes} "
                    f"seed={result.seed} failed",
                    style="yellow",
                )
            log.info(
                "%s nodes=%d seed=%d done in %.2fs",
                result.protocol,
                result.nodes,
                result.seed,
                result.wall_time_s,
            )

        results = run_experiment(scenarios, workers=workers, on_result=progress)
        csv_path = emit_csv(results, out / RESULTS_FILENAME)
    except WsnSimError as e:
        console.print(f"❌ {e}", style="bold red")
        raise typer.Exit(1)
    except OSError as e:
        console.print(f"❌ Could not write to {out}: {e}", style="bold red")
        raise typer.Exit(1)

    console.print(results_table(results, title="Sweep results"))
    console.print(f"✅ Results written to {csv_path}", style="green")
    failed = [r for r in results if not r.ok]
    if failed:
        console.print(
            f"❌ {len(failed)} of {len(results)} run(s) failed", style="bold red"
        )
        raise typer.Exit(1)
    return results
