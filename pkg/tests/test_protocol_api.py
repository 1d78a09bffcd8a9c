"""Runtime wiring shared by every protocol: roles, timers, faults, buffers."""

from typing import Any, List

import pytest

from tests.helpers import line_topology, settings
from wsnsim.protocols.base import (
    Protocol,
    ProtocolNode,
    ProtocolRuntime,
    Role,
    SendBuffer,
)
from wsnsim.protocols.packets import Packet, PacketKind
from wsnsim.protocols.registry import PROTOCOL_NAMES, get_protocol


class EchoNode(ProtocolNode):
    """Source broadcasts every packet; relays rebroadcast once; consumer consumes."""

    def __init__(self, ctx, protocol):
        super().__init__(ctx, protocol)
        self.timers: List[Any] = []
        self.seen = set()
        self.failures = []

    def on_start(self) -> None:
        self.ctx.set_timer(self.protocol.seconds(1.5), "tick", self.node_id)

    def on_timer(self, tag: str, payload: Any) -> None:
        self.timers.append((self.ctx.now, tag, payload))

    def on_data(self, packet: Packet) -> None:
        self.ctx.transmit(packet)

    def on_packet(self, sender: int, packet: Packet) -> None:
        if self.role is Role.CONSUMER:
            self.ctx.consume(packet)
        elif self.role is Role.RELAY and packet.key not in self.seen:
            self.seen.add(packet.key)
            self.ctx.transmit(packet.forwarded())


class EchoProtocol(Protocol):
    name = "echo"
    node_class = EchoNode


def _runtime(overrides=None, faults=()):
    return ProtocolRuntime(
        EchoProtocol, line_topology(), settings(overrides), seed=1, faults=faults
    )


def test_registry_knows_four_protocols():
    assert PROTOCOL_NAMES == ("fdddp", "dddp", "cbddp", "eagddp")
    assert get_protocol("CBDDP").name == "cbddp"
    with pytest.raises(KeyError):
        get_protocol("gossip")


def test_roles_follow_topology():
    runtime = _runtime()
    roles = [node.role for node in runtime.nodes]
    assert roles == [Role.CONSUMER, Role.RELAY, Role.SOURCE]
    assert runtime.source_node is runtime.nodes[2]
    assert runtime.consumer_node is runtime.nodes[0]


def test_data_generated_every_interval_and_delivered():
    runtime = _runtime({"simulation.duration_s": 10})
    ledger = runtime.run()
    # ticks at 0, 2, 4, 6, 8
    assert ledger.sent == 5
    assert ledger.received == 5
    assert ledger.duplicates == 0
    assert runtime.finished


def test_timers_fire_with_payload():
    runtime = _runtime({"simulation.duration_s": 2})
    runtime.run()
    assert runtime.nodes[1].timers == [(1_500_000, "tick", 1)]


def test_fault_kills_node_at_scheduled_time():
    runtime = _runtime({"simulation.duration_s": 10}, faults=[(1, 5.0)])
    ledger = runtime.run()
    # packets at 0, 2, 4 get through the relay; 6 and 8 do not
    assert ledger.received == 3
    assert not runtime.network.alive(1)


def test_dead_node_timers_do_not_fire():
    runtime = _runtime({"simulation.duration_s": 2}, faults=[(1, 1.0)])
    runtime.run()
    assert runtime.nodes[1].timers == []
    assert runtime.nodes[0].timers == [(1_500_000, "tick", 0)]


def test_send_buffer_drops_oldest():
    buffer = SendBuffer(2)
    for seq in range(3):
        buffer.push(Packet(PacketKind.DATA, 0, seq, 64))
    assert buffer.dropped == 1
    assert [p.seq for p in buffer.drain()] == [1, 2]
    assert len(buffer) == 0


def test_forwarded_copy_bumps_hop_count_only():
    packet = Packet(PacketKind.DATA, 4, 9, 64)
    copy = packet.forwarded()
    assert copy.hop_count == 1
    assert copy.key == packet.key == (4, 9)


def test_control_packets_use_control_size():
    runtime = _runtime()
    packet = runtime.nodes[0].ctx.control_packet(PacketKind.QUERY, 3)
    assert packet.size == 36
    assert packet.origin == 0
