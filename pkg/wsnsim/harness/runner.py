import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, Hashable, List, Optional, Sequence, Tuple

import psutil

from wsnsim.errors import WsnSimError
from wsnsim.harness.scenario import Scenario
from wsnsim.metrics import RunResult
from wsnsim.network.topology import Topology
from wsnsim.protocols.base import ProtocolRuntime
from wsnsim.protocols.registry import get_protocol
from wsnsim.utils.console import get_logger

log = get_logger(__name__)

ResultCallback = Callable[[RunResult], None]


@dataclass
class RunOutcome:
    result: RunResult
    runtime: ProtocolRuntime


@dataclass(frozen=True)
class RunJob:
    scenario: Scenario
    seed: int
    topology: Topology


def run_single(
    scenario: Scenario,
    seed: int,
    topology: Optional[Topology] = None,
    trace: bool = False,
) -> RunOutcome:
    """Run one protocol on one placement; any error during the run marks it failed."""
    if topology is None:
        topology = scenario.topology(seed)
    runtime = ProtocolRuntime(
        get_protocol(scenario.protocol),
        topology,
        scenario.settings,
        seed,
        faults=scenario.faults,
        trace=trace,
    )
    started = time.perf_counter()
    try:
        ledger = runtime.run()
    except Exception as e:
        elapsed = time.perf_counter() - started
        if isinstance(e, WsnSimError):
            log.warning(
                "%s nodes=%d seed=%d failed: %s",
                scenario.protocol,
                topology.size,
                seed,
                e,
            )
        else:
            log.exception(
                "%s nodes=%d seed=%d crashed", scenario.protocol, topology.size, seed
            )
        return RunOutcome(
            RunResult.failed(scenario.protocol, topology.size, seed, elapsed), runtime
        )
    elapsed = time.perf_counter() - started
    result = RunResult.from_ledger(
        scenario.protocol, topology.size, seed, ledger, wall_time_s=elapsed
    )
    return RunOutcome(result, runtime)


def _run_job(job: RunJob) -> RunResult:
    return run_single(job.scenario, job.seed, job.topology).result


def _topology_key(scenario: Scenario, seed: int) -> Tuple[Hashable, ...]:
    path: Optional[Path] = scenario.topology_path
    return (
        str(path) if path else None,
        scenario.nodes,
        scenario.width,
        scenario.height,
        scenario.settings.radio.range_m,
        seed,
    )


def default_workers(job_count: int) -> int:
    cpu_cores = psutil.cpu_count(logical=True) or 1
    return max(1, min(cpu_cores, job_count))


def run_experiment(
    scenarios: Sequence[Scenario],
    workers: Optional[int] = None,
    on_result: Optional[ResultCallback] = None,
) -> List[RunResult]:
    """Run every (scenario, seed) pair; all protocols share each seed's placement.

    Results come back sorted by (protocol, nodes, seed) whatever the
    completion order.
    """
    topologies: Dict[Tuple[Hashable, ...], Topology] = {}
    jobs: List[RunJob] = []
    for scenario in scenarios:
        for seed in scenario.seeds:
            key = _topology_key(scenario, seed)
            if key not in topologies:
                topologies[key] = scenario.topology(seed)
            jobs.append(RunJob(scenario, seed, topologies[key]))

    if workers is None:
        workers = default_workers(len(jobs))
    log.debug("running %d jobs on %d workers", len(jobs), workers)

    results: List[RunResult] = []
    if workers <= 1 or len(jobs) <= 1:
        for job in jobs:
            result = _run_job(job)
            results.append(result)
            if on_result is not None:
                on_result(result)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_job, job) for job in jobs]
            for future in futures:
                result = future.result()
                results.append(result)
                if on_result is not None:
                    on_result(result)
    return sorted(results, key=lambda r: r.sort_key)
