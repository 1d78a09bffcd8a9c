"""Forwarding diffusion: interest flooding, gradients, exploratory data,
single-path reinforcement and local repair.

The consumer floods an interest every refresh interval carrying a hop
count; every node installs a gradient toward each neighbor it hears the
interest from at fewer hops than its own. While no path is reinforced the
source sends exploratory copies down those gradients: a copy is
rebroadcast only by receivers closer to the consumer than its sender.
The consumer reinforces the neighbor that delivered the first copy;
reinforcement travels back along first senders and pins one path. Every
`exploratory_every`-th packet after that is an exploratory copy sent along
the reinforced path, and the consumer re-pins the path it arrived on.
A node whose reinforced neighbor stops acknowledging unicasts for
`repair_timeout` drops it and floods a repair request; the consumer
reinforces its first arrival back to the repairing node.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Set, Tuple

from wsnsim.engine import EventHandle, SimTime, seconds_to_time
from wsnsim.protocols.base import (
    NodeContext,
    Protocol,
    ProtocolNode,
    Role,
    SendBuffer,
)
from wsnsim.protocols.packets import Packet, PacketKind
from wsnsim.utils.console import get_logger

log = get_logger(__name__)

INTEREST_ID = "sensor-data"
NO_HOPS = 1 << 30
# (packet kind, origin, seq) of an exploratory copy or a repair request
CopyKey = Tuple[PacketKind, int, int]


@dataclass(frozen=True)
class Gradient:
    toward: int
    data_rate: float
    established_at: SimTime


@dataclass
class InterestEntry:
    interest_id: str
    gradients: Dict[int, Gradient] = field(default_factory=dict)
    reinforced: Optional[int] = None

    def install(self, neighbor: int, data_rate: float, now: SimTime) -> None:
        self.gradients[neighbor] = Gradient(neighbor, data_rate, now)

    def expire(self, older_than: SimTime) -> None:
        stale = [n for n, g in self.gradients.items() if g.established_at < older_than]
        for neighbor in stale:
            del self.gradients[neighbor]
        if self.reinforced is not None and self.reinforced not in self.gradients:
            self.reinforced = None

    def drop(self, neighbor: int) -> None:
        self.gradients.pop(neighbor, None)
        if self.reinforced == neighbor:
            self.reinforced = None


@dataclass
class ExploratoryCache:
    seen: Set[CopyKey] = field(default_factory=set)
    first_sender: Dict[CopyKey, int] = field(default_factory=dict)

    def observe(self, key: CopyKey, sender: Optional[int]) -> bool:
        """Record a copy; True only for the first reception of `key`."""
        if key in self.seen:
            return False
        self.seen.add(key)
        if sender is not None:
            self.first_sender[key] = sender
        return True


@dataclass(frozen=True)
class InterestHeader:
    interest_id: str
    round: int
    hops: int = 0


@dataclass(frozen=True)
class ExploratoryHeader:
    # interest hop count of the transmitting node
    hops: int
    along_path: bool = False


@dataclass(frozen=True)
class ReinforcementHeader:
    key: CopyKey


@dataclass(frozen=True)
class RepairHeader:
    broken_link: int


class FdddpNode(ProtocolNode):
    protocol: "FdddpProtocol"

    def __init__(self, ctx: NodeContext, protocol: "FdddpProtocol"):
        super().__init__(ctx, protocol)
        self.interest = InterestEntry(INTEREST_ID)
        self.interest_round = -1
        self.hops = 0 if self.role is Role.CONSUMER else NO_HOPS
        self.cache = ExploratoryCache()
        self.buffer = SendBuffer(protocol.settings.fdddp.buffer_size)
        self._control_seq = 0
        self._repair_timer: Optional[EventHandle] = None
        self._suspect: Optional[int] = None
        self.repairs = 0

    def _next_control_seq(self) -> int:
        self._control_seq += 1
        return self._control_seq

    # -- consumer: interest flooding -------------------------------------

    def on_start(self) -> None:
        if self.role is Role.CONSUMER:
            self.broadcast_interest()

    def broadcast_interest(self) -> None:
        self.interest_round += 1
        header = InterestHeader(INTEREST_ID, self.interest_round)
        self.ctx.transmit(
            self.ctx.control_packet(PacketKind.INTEREST, self.interest_round, header)
        )
        self.ctx.set_timer(self.protocol.interest_refresh, "interest")

    def on_timer(self, tag: str, payload: Any) -> None:
        if tag == "interest":
            self.broadcast_interest()
        elif tag == "repair":
            self._repair_timer = None
            if payload == self._suspect and payload == self.interest.reinforced:
                self.repair_path(payload)
            self._suspect = None

    def _on_interest(self, sender: int, packet: Packet) -> None:
        if self.role is Role.CONSUMER:
            return
        header: InterestHeader = packet.header
        now = self.ctx.now
        if header.round > self.interest_round:
            self.interest_round = header.round
            self.hops = header.hops + 1
            self.interest.expire(now - 2 * self.protocol.interest_refresh)
            self.interest.install(sender, self.protocol.data_rate, now)
            self.ctx.transmit(packet.forwarded(hops=self.hops))
            if self.role is Role.SOURCE and len(self.buffer):
                for buffered in self.buffer.drain():
                    self.send_data(buffered)
        elif header.round == self.interest_round and header.hops < self.hops:
            self.interest.install(sender, self.protocol.data_rate, now)

    # -- source: exploratory and reinforced data -------------------------

    def on_data(self, packet: Packet) -> None:
        if not self.interest.gradients:
            self.buffer.push(packet)
            return
        self.send_data(packet)

    def send_data(self, packet: Packet) -> None:
        reinforced = self.interest.reinforced
        if reinforced is None:
            self.send_exploratory(packet)
        elif packet.seq % self.protocol.exploratory_every == 0:
            self.send_exploratory(packet, along=reinforced)
        else:
            self.ctx.transmit(packet, reinforced)

    def send_exploratory(self, packet: Packet, along: Optional[int] = None) -> None:
        """Gradient-directed broadcast, or a unicast down the reinforced link."""
        exploratory = Packet(
            kind=PacketKind.EXPLORATORY,
            origin=packet.origin,
            seq=packet.seq,
            size=packet.size,
            header=ExploratoryHeader(self.hops, along_path=along is not None),
        )
        self.cache.observe((PacketKind.EXPLORATORY, packet.origin, packet.seq), None)
        self.ctx.transmit(exploratory, along)

    def _on_flooded_copy(self, sender: int, packet: Packet) -> None:
        if packet.kind is PacketKind.EXPLORATORY and self.role is not Role.CONSUMER:
            header: ExploratoryHeader = packet.header
            # only the sender's gradient neighbors carry a broadcast copy on
            if not header.along_path and not self.hops < header.hops:
                return
        key = (packet.kind, packet.origin, packet.seq)
        if not self.cache.observe(key, sender):
            return
        if self.role is Role.CONSUMER:
            if packet.kind is PacketKind.EXPLORATORY:
                self.ctx.consume(packet)
            self.reinforce(key)
        elif packet.kind is PacketKind.REPAIR:
            if self.interest.gradients:
                self.ctx.transmit(packet.forwarded())
        else:
            self._forward_exploratory(packet)

    def _forward_exploratory(self, packet: Packet) -> None:
        header: ExploratoryHeader = packet.header
        reinforced = self.interest.reinforced
        if header.along_path and reinforced is not None:
            self.ctx.transmit(packet.forwarded(hops=self.hops), reinforced)
        elif self.interest.gradients:
            # a path copy that finds no reinforced link spreads from here
            self.ctx.transmit(packet.forwarded(hops=self.hops, along_path=False))

    # -- reinforcement ---------------------------------------------------

    def reinforce(self, key: CopyKey) -> None:
        """Consumer: pin the path the first copy of `key` arrived on."""
        first_sender = self.cache.first_sender[key]
        log.debug("consumer %d reinforces %d for %s", self.node_id, first_sender, key)
        self.ctx.transmit(
            self.ctx.control_packet(
                PacketKind.REINFORCEMENT,
                self._next_control_seq(),
                ReinforcementHeader(key),
            ),
            first_sender,
        )

    def _on_reinforcement(self, sender: int, packet: Packet) -> None:
        key = packet.header.key
        self.interest.install(sender, self.protocol.data_rate, self.ctx.now)
        self.interest.reinforced = sender
        if key[1] == self.node_id:
            return
        upstream = self.cache.first_sender.get(key)
        if upstream is not None:
            self.ctx.transmit(packet.forwarded(), upstream)

    def _on_data(self, sender: int, packet: Packet) -> None:
        if self.role is Role.CONSUMER:
            self.ctx.consume(packet)
            return
        if packet.hop_count > self.protocol.max_hops:
            self.ctx.routing_failure()
            return
        reinforced = self.interest.reinforced
        if reinforced is None:
            self.ctx.routing_failure()
            return
        self.ctx.transmit(packet.forwarded(), reinforced)

    # -- local repair ----------------------------------------------------

    def on_link_failure(self, neighbor: int, packet: Packet) -> None:
        if packet.kind not in (PacketKind.DATA, PacketKind.EXPLORATORY):
            return
        if neighbor != self.interest.reinforced:
            return
        if self._repair_timer is None:
            self._suspect = neighbor
            self._repair_timer = self.ctx.set_timer(
                self.protocol.repair_timeout, "repair", neighbor
            )

    def repair_path(self, broken: int) -> None:
        self.interest.drop(broken)
        if not self.interest.gradients:
            log.debug(
                "node %d: no alternate gradient after losing %d", self.node_id, broken
            )
            return
        self.repairs += 1
        request = self.ctx.control_packet(
            PacketKind.REPAIR, self._next_control_seq(), RepairHeader(broken)
        )
        self.cache.observe((PacketKind.REPAIR, self.node_id, request.seq), None)
        log.debug("node %d: repairing around %d", self.node_id, broken)
        self.ctx.transmit(request)

    # -- dispatch --------------------------------------------------------

    def on_packet(self, sender: int, packet: Packet) -> None:
        kind = packet.kind
        if kind is PacketKind.INTEREST:
            self._on_interest(sender, packet)
        elif kind is PacketKind.EXPLORATORY or kind is PacketKind.REPAIR:
            self._on_flooded_copy(sender, packet)
        elif kind is PacketKind.REINFORCEMENT:
            self._on_reinforcement(sender, packet)
        elif kind is PacketKind.DATA:
            self._on_data(sender, packet)

    def state_dump(self) -> str:
        gradients = ",".join(str(n) for n in sorted(self.interest.gradients))
        reinforced = self.interest.reinforced
        shown = "-" if reinforced is None else str(reinforced)
        return f"hops={self.hops} gradients={gradients} reinforced={shown}"


class FdddpProtocol(Protocol):
    name = "fdddp"
    node_class = FdddpNode

    def __init__(self, runtime):
        super().__init__(runtime)
        fd = self.settings.fdddp
        data_interval_s = self.settings.simulation.data_interval_s
        self.interest_refresh = seconds_to_time(fd.interest_refresh_s)
        self.exploratory_every = fd.exploratory_every
        self.repair_timeout = seconds_to_time(
            fd.repair_timeout_factor * data_interval_s
        )
        self.data_rate = 1.0 / data_interval_s
        self.max_hops = 4 * max(1, self.topology.size)
