"""Metric formulas, the run ledger and trace-recomputed metric oracles."""

from collections import defaultdict

import pytest

from tests.helpers import run_protocol
from wsnsim.engine import seconds_to_time
from wsnsim.metrics import (
    MetricsLedger,
    RunResult,
    band_util_sample,
    bandwidth_utilization,
    delivery_ratio,
    mean_energy_drop,
    transmissions_by_kind,
)
from wsnsim.network.ledger import LinkByteLedger
from wsnsim.network.topology import generate_topology
from wsnsim.protocols.packets import Packet, PacketKind


def _ledger(nodes=2, interval=100_000):
    return MetricsLedger(
        node_count=nodes,
        link_bytes=LinkByteLedger(interval=interval, network_speed_bps=2e6),
    )


def _data(seq):
    return Packet(kind=PacketKind.DATA, origin=0, seq=seq, size=64)


def test_mean_energy_drop():
    assert mean_energy_drop([2.0, 2.0], [1.5, 2.0]) == 0.25
    assert mean_energy_drop([], []) == 0.0


def test_band_util_sample():
    # 2500 bytes in a 0.1 s cycle on a 2 Mb/s network is 10 %
    assert band_util_sample(2500, 1000, 0.1, 2e6) == pytest.approx(10.0)
    assert band_util_sample(0, 0, 0.0, 2e6) is None


def test_delivery_ratio_counts_duplicates():
    ledger = _ledger()
    for seq in range(4):
        ledger.on_generated()
    for seq in (0, 0, 1, 2, 3):
        ledger.on_consumed(_data(seq))
    assert delivery_ratio(ledger) == 1.25
    assert ledger.duplicates == 1
    assert ledger.unique == 4


def test_delivery_ratio_undefined_without_traffic():
    assert delivery_ratio(_ledger()) is None


def test_first_copy_flag():
    ledger = _ledger()
    assert ledger.on_consumed(_data(0))
    assert not ledger.on_consumed(_data(0))


def test_bandwidth_averages_every_cycle():
    ledger = _ledger(interval=100_000)
    ledger.on_transmit(0, _data(0), 10)
    ledger.on_receive(1, _data(0), 20)
    ledger.close([], 200_000)
    # one busy cycle of 64 bytes, one idle cycle
    busy = 64 * 8 * 100 / (0.1 * 2e6)
    assert bandwidth_utilization(ledger) == pytest.approx(busy / 2)


def test_routing_and_data_transmissions_split():
    ledger = _ledger()
    ledger.on_transmit(0, Packet(PacketKind.QUERY, 0, 0, 36), 0)
    ledger.on_transmit(1, _data(0), 0)
    assert ledger.routing_tx == [1, 0]
    assert ledger.data_tx == [0, 1]
    assert ledger.total_transmissions == 2


def test_failed_result_has_empty_metrics():
    result = RunResult.failed("dddp", 40, 3)
    assert not result.ok
    assert result.dr is None and result.r_oh is None
    assert result.unique_fraction is None
    assert result.sort_key == ("dddp", 40, 3)


def _recompute(runtime):
    """E_avg, R_OH, Dr and Band_util from the raw event trace alone."""
    trace = runtime.sim.trace
    topology = runtime.topology
    initial = runtime.settings.energy.initial_j
    consumed = [0.0] * topology.size
    interval = seconds_to_time(runtime.settings.metrics.sample_interval_s)
    buckets = defaultdict(lambda: [0, 0])
    routing = generated = consumptions = 0
    for record in trace:
        if record.kind == "tx":
            consumed[record.target] += record.detail["energy"]
            buckets[record.time // interval][1] += record.detail["bytes"]
            routing += record.detail["routing"]
        elif record.kind == "rx":
            consumed[record.target] += record.detail["energy"]
            buckets[record.time // interval][0] += record.detail["bytes"]
        elif record.kind == "generate":
            generated += 1
        elif record.kind == "consume":
            consumptions += 1

    e_avg = mean_energy_drop([initial] * topology.size, [initial - c for c in consumed])
    duration = seconds_to_time(runtime.settings.simulation.duration_s)
    samples = [
        band_util_sample(
            *buckets.get(index, (0, 0)),
            runtime.settings.metrics.sample_interval_s,
            runtime.settings.metrics.network_speed_bps,
        )
        for index in range(duration // interval)
    ]
    return {
        "e_avg_j": e_avg,
        "r_oh": routing,
        "dr": consumptions / generated,
        "band_util_pct": sum(samples) / len(samples),
    }


@pytest.mark.parametrize("protocol", ["fdddp", "dddp", "cbddp", "eagddp"])
def test_metrics_match_trace_recount(protocol):
    topology = generate_topology(10, 300, 300, 271.3, seed=4)
    runtime = run_protocol(
        protocol, topology, {"simulation.duration_s": 30}, seed=4, trace=True
    )
    result = RunResult.from_ledger(protocol, 10, 4, runtime.ledger)
    expected = _recompute(runtime)
    assert result.r_oh == expected["r_oh"]
    assert result.dr == expected["dr"]
    assert result.e_avg_j == pytest.approx(expected["e_avg_j"], rel=1e-12)
    assert result.band_util_pct == pytest.approx(expected["band_util_pct"], rel=1e-12)
    assert result.sent == 15


def test_transmissions_by_kind():
    runtime = run_protocol(
        "cbddp",
        generate_topology(10, 300, 300, 271.3, seed=2),
        {"simulation.duration_s": 10},
        trace=True,
    )
    counts = transmissions_by_kind(runtime.sim.trace)
    assert counts["advertisement"] == sum(runtime.ledger.routing_tx)
    assert counts["data"] == sum(runtime.ledger.data_tx)
