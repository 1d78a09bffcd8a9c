"""Same scenario and seed: identical traces, results and CSV bytes."""

import io

import pytest

from wsnsim.harness.results import write_csv
from wsnsim.harness.runner import run_experiment, run_single
from wsnsim.harness.scenario import Scenario
from wsnsim.utils.settings_models import RunSettings

SHORT = RunSettings().with_overrides({"simulation.duration_s": 40})


def _trace_text(outcome):
    out = io.StringIO()
    outcome.runtime.sim.dump_trace(out)
    return out.getvalue()


@pytest.mark.parametrize("protocol", ["fdddp", "dddp", "cbddp", "eagddp"])
def test_rerun_gives_identical_trace_and_state(protocol):
    scenario = Scenario.for_row(protocol, 20, seeds=(3,), settings=SHORT)
    first = run_single(scenario, 3, trace=True)
    second = run_single(scenario, 3, trace=True)
    assert _trace_text(first) == _trace_text(second)
    assert first.runtime.state_dump() == second.runtime.state_dump()
    assert first.result.model_dump(exclude={"wall_time_s"}) == second.result.model_dump(
        exclude={"wall_time_s"}
    )


def test_serial_and_parallel_sweeps_write_the_same_csv():
    scenarios = [
        Scenario.for_row(protocol, 20, seeds=(1, 2), settings=SHORT)
        for protocol in ("cbddp", "fdddp")
    ]
    serial, parallel = io.StringIO(), io.StringIO()
    write_csv(run_experiment(scenarios, workers=1), serial)
    write_csv(run_experiment(scenarios, workers=2), parallel)
    assert serial.getvalue() == parallel.getvalue()
    assert len(serial.getvalue().splitlines()) == 5


def test_every_protocol_sees_the_same_placement():
    dumps = {
        Scenario.for_row(protocol, 40, seeds=(7,)).topology(7).dumps()
        for protocol in ("fdddp", "dddp", "cbddp", "eagddp")
    }
    assert len(dumps) == 1
