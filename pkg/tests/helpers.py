"""Hand-placed topologies and a one-call protocol runner for tests."""

from typing import Dict, Optional, Sequence

from wsnsim.network.topology import Node, Topology
from wsnsim.protocols.base import Fault, ProtocolRuntime
from wsnsim.protocols.registry import get_protocol
from wsnsim.utils.settings_models import RunSettings

RANGE_M = 271.3


def line_topology() -> Topology:
    """consumer 0 -- relay 1 -- source 2, 200 m apart."""
    nodes = (Node(0, 0.0, 5.0), Node(1, 200.0, 5.0), Node(2, 400.0, 5.0))
    return Topology(400.0, 10.0, RANGE_M, nodes, source=2, consumer=0)


def diamond_topology() -> Topology:
    """consumer 0 and source 3 joined by two arms through 1 (top) and 2 (bottom)."""
    nodes = (
        Node(0, 0.0, 150.0),
        Node(1, 150.0, 300.0),
        Node(2, 150.0, 0.0),
        Node(3, 300.0, 150.0),
    )
    return Topology(300.0, 300.0, RANGE_M, nodes, source=3, consumer=0)


def settings(overrides: Optional[Dict[str, object]] = None) -> RunSettings:
    return RunSettings().with_overrides(overrides or {})


def run_protocol(
    protocol: str,
    topology: Topology,
    overrides: Optional[Dict[str, object]] = None,
    seed: int = 1,
    faults: Sequence[Fault] = (),
    trace: bool = False,
) -> ProtocolRuntime:
    runtime = ProtocolRuntime(
        get_protocol(protocol),
        topology,
        settings(overrides),
        seed,
        faults=faults,
        trace=trace,
    )
    runtime.run()
    return runtime
