"""Common protocol abstraction.

Every protocol supplies a `Protocol` subclass (per-run shared state) and a
`ProtocolNode` subclass (per-node state machine). Nodes never touch the
simulator or the network directly: everything goes through their
`NodeContext`, and their state only changes inside the callbacks the
`ProtocolRuntime` invokes from the event loop.
"""

from collections import deque
from enum import Enum
from typing import (
    Any,
    ClassVar,
    Deque,
    Dict,
    List,
    Optional,
    Sequence,
    Tuple,
    Type,
)

from wsnsim.engine import (
    HARNESS,
    EventHandle,
    SimEvent,
    Simulator,
    SimTime,
    seconds_to_time,
)
from wsnsim.metrics import MetricsLedger
from wsnsim.network.ledger import LinkByteLedger
from wsnsim.network.radio import Network
from wsnsim.network.topology import Topology
from wsnsim.protocols.packets import Packet, PacketKind
from wsnsim.utils.console import get_logger
from wsnsim.utils.settings_models import RunSettings

log = get_logger(__name__)

# (node id, death time in seconds)
Fault = Tuple[int, float]


class Role(str, Enum):
    SOURCE = "source"
    CONSUMER = "consumer"
    RELAY = "relay"


class SendBuffer:
    """Bounded FIFO for data waiting on a route; drops the oldest when full."""

    def __init__(self, capacity: int):
        self._items: Deque[Packet] = deque(maxlen=capacity)
        self.dropped = 0

    def push(self, packet: Packet) -> None:
        if len(self._items) == self._items.maxlen:
            self.dropped += 1
        self._items.append(packet)

    def drain(self) -> List[Packet]:
        items = list(self._items)
        self._items.clear()
        return items

    def __len__(self) -> int:
        return len(self._items)


class NodeContext:
    """The only handle a protocol node has on the outside world."""

    def __init__(self, runtime: "ProtocolRuntime", node_id: int, role: Role):
        self._runtime = runtime
        self.node_id = node_id
        self.role = role

    @property
    def now(self) -> SimTime:
        return self._runtime.sim.now

    @property
    def topology(self) -> Topology:
        return self._runtime.topology

    @property
    def settings(self) -> RunSettings:
        return self._runtime.settings

    @property
    def position(self) -> Tuple[float, float]:
        return self.topology.position(self.node_id)

    @property
    def neighbors(self) -> Tuple[int, ...]:
        return self.topology.sorted_neighbors(self.node_id)

    @property
    def consumed_energy(self) -> float:
        return self._runtime.network.accounts[self.node_id].consumed

    def distance_to(self, peer: int) -> float:
        return self.topology.distance(self.node_id, peer)

    def link_cost(self, peer: int, nbytes: int) -> float:
        """Energy to unicast `nbytes` to `peer`."""
        return self._runtime.network.link_tx_cost(self.node_id, peer, nbytes)

    def transmit(self, packet: Packet, destination: Optional[int] = None) -> None:
        self._runtime.network.mac_transmit(self.node_id, packet, destination)

    def set_timer(self, delay: SimTime, tag: str, payload: Any = None) -> EventHandle:
        return self._runtime.set_timer(self.node_id, delay, tag, payload)

    def cancel_timer(self, handle: Optional[EventHandle]) -> bool:
        return self._runtime.sim.cancel(handle)

    def consume(self, packet: Packet) -> bool:
        """Deliver a data packet to the application; True on its first copy."""
        return self._runtime.consume(self.node_id, packet)

    def routing_failure(self) -> None:
        self._runtime.ledger.on_routing_failure()

    def control_packet(
        self, kind: PacketKind, seq: int, header: Any = None
    ) -> Packet:
        return Packet(
            kind=kind,
            origin=self.node_id,
            seq=seq,
            size=self.settings.packet.control_bytes,
            header=header,
        )


class ProtocolNode:
    """Per-node protocol state machine; override the callbacks you need."""

    def __init__(self, ctx: NodeContext, protocol: "Protocol"):
        self.ctx = ctx
        self.protocol = protocol

    @property
    def node_id(self) -> int:
        return self.ctx.node_id

    @property
    def role(self) -> Role:
        return self.ctx.role

    def on_start(self) -> None:
        pass

    def on_packet(self, sender: int, packet: Packet) -> None:
        pass

    def on_timer(self, tag: str, payload: Any) -> None:
        pass

    def on_link_failure(self, neighbor: int, packet: Packet) -> None:
        pass

    def on_data(self, packet: Packet) -> None:
        """Source send path for a freshly generated data packet."""

    def state_dump(self) -> str:
        return ""


class Protocol:
    """Per-run protocol object: shared configuration and node factory."""

    name: ClassVar[str] = ""
    node_class: ClassVar[Type[ProtocolNode]] = ProtocolNode

    def __init__(self, runtime: "ProtocolRuntime"):
        self.runtime = runtime
        self.settings = runtime.settings
        self.topology = runtime.topology

    def seconds(self, value: float) -> SimTime:
        return seconds_to_time(value)

    def create_node(self, ctx: NodeContext) -> ProtocolNode:
        return self.node_class(ctx, self)


class ProtocolRuntime:
    """Wires one protocol onto the simulator, network and metrics ledger."""

    def __init__(
        self,
        protocol_cls: Type[Protocol],
        topology: Topology,
        settings: RunSettings,
        seed: int,
        faults: Sequence[Fault] = (),
        trace: bool = False,
    ):
        self.topology = topology
        self.settings = settings
        self.seed = seed
        self.sim = Simulator(
            seed=seed,
            trace=trace,
            wall_time_budget_s=settings.simulation.wall_time_budget_s,
        )
        self.ledger = MetricsLedger(
            node_count=topology.size,
            link_bytes=LinkByteLedger(
                interval=seconds_to_time(settings.metrics.sample_interval_s),
                network_speed_bps=settings.metrics.network_speed_bps,
            ),
        )
        self.network = Network(self.sim, topology, settings, self.ledger)
        self.network.attach(self._on_receive, self._on_link_failure)
        self.protocol = protocol_cls(self)
        self.nodes: List[ProtocolNode] = [
            self.protocol.create_node(NodeContext(self, node.id, self._role(node.id)))
            for node in topology.nodes
        ]
        self._faults = sorted(faults, key=lambda fault: (fault[1], fault[0]))
        self._next_data_seq = 0
        self._end: SimTime = 0
        self.finished = False

    def _role(self, node_id: int) -> Role:
        if node_id == self.topology.source:
            return Role.SOURCE
        if node_id == self.topology.consumer:
            return Role.CONSUMER
        return Role.RELAY

    @property
    def source_node(self) -> Optional[ProtocolNode]:
        if self.topology.source is None:
            return None
        return self.nodes[self.topology.source]

    @property
    def consumer_node(self) -> Optional[ProtocolNode]:
        if self.topology.consumer is None:
            return None
        return self.nodes[self.topology.consumer]

    def set_timer(
        self, node_id: int, delay: SimTime, tag: str, payload: Any
    ) -> EventHandle:
        return self.sim.schedule_in(
            delay, node_id, f"timer:{tag}", self._fire_timer, (tag, payload)
        )

    def _fire_timer(self, event: SimEvent) -> None:
        if self.network.alive(event.target):
            tag, payload = event.payload
            self.nodes[event.target].on_timer(tag, payload)

    def _on_receive(self, receiver: int, sender: int, packet: Packet) -> None:
        self.nodes[receiver].on_packet(sender, packet)

    def _on_link_failure(self, sender: int, neighbor: int, packet: Packet) -> None:
        self.nodes[sender].on_link_failure(neighbor, packet)

    def consume(self, node_id: int, packet: Packet) -> bool:
        first = self.ledger.on_consumed(packet)
        self.sim.record(
            node_id, "consume", origin=packet.origin, seq=packet.seq, first=first
        )
        return first

    def generate_data_tick(self, event: SimEvent) -> None:
        source = self.topology.source
        if source is not None and self.network.alive(source):
            packet = Packet(
                kind=PacketKind.DATA,
                origin=source,
                seq=self._next_data_seq,
                size=self.settings.packet.data_bytes,
            )
            self._next_data_seq += 1
            self.ledger.on_generated()
            self.sim.record(source, "generate", seq=packet.seq)
            self.nodes[source].on_data(packet)
        next_at = event.fire_at + seconds_to_time(
            self.settings.simulation.data_interval_s
        )
        if next_at < self._end:
            self.sim.schedule(next_at, HARNESS, "data-tick", self.generate_data_tick)

    def _kill(self, event: SimEvent) -> None:
        self.network.kill(event.payload)

    def _start_node(self, event: SimEvent) -> None:
        if self.network.alive(event.target):
            self.nodes[event.target].on_start()

    def run(self) -> MetricsLedger:
        sim_settings = self.settings.simulation
        self._end = seconds_to_time(sim_settings.duration_s)
        for node in self.nodes:
            self.sim.schedule(0, node.node_id, "start", self._start_node)
        data_start = seconds_to_time(sim_settings.data_start_s)
        if self.topology.source is not None and data_start < self._end:
            self.sim.schedule(data_start, HARNESS, "data-tick", self.generate_data_tick)
        for node_id, at_s in self._faults:
            self.sim.schedule(
                seconds_to_time(at_s), HARNESS, "fault", self._kill, node_id
            )
        self.sim.run_until(self._end)
        self.ledger.close(self.network.accounts, self._end)
        self.finished = True
        log.debug(
            "%s seed=%d finished: sent=%d received=%d",
            self.protocol.name,
            self.seed,
            self.ledger.sent,
            self.ledger.received,
        )
        return self.ledger

    def state_dump(self) -> Dict[int, str]:
        return {node.node_id: node.state_dump() for node in self.nodes}
