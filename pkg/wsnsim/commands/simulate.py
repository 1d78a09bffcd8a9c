from pathlib import Path
from typing import List, Optional

import typer

from wsnsim.errors import WsnSimError
from wsnsim.harness.results import emit_csv, results_table
from wsnsim.harness.runner import run_experiment, run_single
from wsnsim.harness.scenario import Scenario, load_scenario
from wsnsim.metrics import RunResult
from wsnsim.utils.console import console, get_logger

log = get_logger(__name__)


def trace_path_for(trace_path: Path, seed: int, seed_count: int) -> Path:
    """One trace file per seed; a single-seed run writes `trace_path` itself."""
    if seed_count == 1:
        return trace_path
    return trace_path.with_name(f"{trace_path.stem}.seed{seed}{trace_path.suffix}")


def _run_traced(scenario: Scenario, trace_path: Path) -> List[RunResult]:
    results = []
    for seed in scenario.seeds:
        outcome = run_single(scenario, seed, trace=True)
        path = trace_path_for(trace_path, seed, len(scenario.seeds))
        path.parent.mkdir(parents=True, exist_ok=True)
        outcome.runtime.sim.dump_trace(path)
        log.info("trace for seed %d written to %s", seed, path)
        results.append(outcome.result)
    return results


def simulate_command(
    scenario_path: Path,
    seed: Optional[int] = None,
    trace_path: Optional[Path] = None,
    csv_path: Optional[Path] = None,
    workers: Optional[int] = None,
) -> None:
    try:
        scenario = load_scenario(scenario_path)
        if seed is not None:
            scenario = scenario.model_copy(update={"seeds": (seed,)})
        console.print(
            f"🚀 Simulating {scenario.protocol.upper()} on {scenario.nodes} nodes "
            f"({scenario.width:g}×{scenario.height:g} m), "
            f"{len(scenario.seeds)} seed(s)",
            style="bold cyan",
        )
        if trace_path is not None:
            results = _run_traced(scenario, trace_path)
        else:
            results = run_experiment([scenario], workers=workers)
        if csv_path is not None:
            emit_csv(results, csv_path)
    except WsnSimError as e:
        console.print(f"❌ {e}", style="bold red")
        raise typer.Exit(1)
    except OSError as e:
        console.print(f"❌ Could not write output: {e}", style="bold red")
        raise typer.Exit(1)

    console.print(results_table(results))
    if csv_path is not None:
        console.print(f"✅ Results written to {csv_path}", style="green")
    if trace_path is not None:
        console.print(f"✅ Event trace written to {trace_path}", style="green")
    failed = [r for r in results if not r.ok]
    if failed:
        console.print(
            f"❌ {len(failed)} of {len(results)} run(s) failed", style="bold red"
        )
        raise typer.Exit(1)
