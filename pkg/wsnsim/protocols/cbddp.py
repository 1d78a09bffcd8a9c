"""Credit broadcast dissemination over a consumer-rooted cost field.

The consumer advertises cost 0; every node relaxes its cost to reach the
consumer with the energy of a data transmission over each link and
re-advertises (after a short coalescing backoff) whenever it improves.
Data is broadcast with a credit budget of (1 + beta) times the source's
cost. A node rebroadcasts a packet only while the remaining ratio of that
budget stays above the threshold and only downhill, toward strictly lower
cost, so several near-optimal paths carry each packet and none loops.

The consumer refreshes the field when its data stops for longer than the
refresh timeout, or when a forwarder reports that none of the downhill
neighbors it expected to rebroadcast a packet was heard doing so.
"""

import math
from dataclasses import dataclass, replace
from typing import Any, Dict, List, Optional, Set, Tuple

from wsnsim.engine import EventHandle, SimTime
from wsnsim.protocols.base import NodeContext, Protocol, ProtocolNode, Role, SendBuffer
from wsnsim.protocols.packets import Packet, PacketKind
from wsnsim.utils.console import get_logger

log = get_logger(__name__)

INFINITY = math.inf
# relative slack for "on a minimum-cost path" when beta is 0
ZERO_CREDIT_TOLERANCE = 1e-9


@dataclass(frozen=True)
class AdvertHeader:
    setup_id: int
    cost: float
    position: Tuple[float, float]


@dataclass(frozen=True)
class CreditHeader:
    cost_source: float
    beta: float
    e_current: float
    e_min: float


@dataclass(frozen=True)
class RefreshRequestHeader:
    setup_id: int


@dataclass(frozen=True)
class ForwardDecision:
    rr: float
    threshold: float

    @property
    def forward(self) -> bool:
        return self.rr > self.threshold


@dataclass(frozen=True)
class CostField:
    costs: Dict[int, float]

    def __getitem__(self, node: int) -> float:
        return self.costs[node]

    def finite(self) -> Dict[int, float]:
        return {n: c for n, c in self.costs.items() if math.isfinite(c)}


def remaining_ratio(header: CreditHeader, node_cost: float) -> float:
    """Fraction of the packet's extra credit left after reaching this node.

    The budget is (1 + beta) * Cost_source; `header.e_current` must already
    include the hop that delivered the packet here.
    """
    if not math.isfinite(node_cost):
        return -INFINITY
    budget = (1 + header.beta) * header.cost_source
    left = budget - header.e_current - node_cost
    credit = header.beta * header.cost_source
    if credit <= 0:
        # zero credit: only exact minimum-cost paths stay in budget
        slack = ZERO_CREDIT_TOLERANCE * max(header.cost_source, 1e-300)
        return INFINITY if left >= -slack else -INFINITY
    return left / credit


def decide(header: CreditHeader, node_cost: float, threshold: float) -> ForwardDecision:
    if not node_cost < header.e_min:
        return ForwardDecision(-INFINITY, threshold)
    return ForwardDecision(remaining_ratio(header, node_cost), threshold)


class CbddpNode(ProtocolNode):
    protocol: "CbddpProtocol"

    def __init__(self, ctx: NodeContext, protocol: "CbddpProtocol"):
        super().__init__(ctx, protocol)
        self.cost = INFINITY
        self.setup_id = -1
        self._advert_timer: Optional[EventHandle] = None
        self.seen: Set[Tuple[int, int]] = set()
        self.buffer = SendBuffer(protocol.settings.cbddp.buffer_size)
        # advertised costs heard in the current setup
        self.neighbor_costs: Dict[int, float] = {}
        self.overheard: Set[Tuple[int, int]] = set()
        self.misses = 0
        self.requested_setup = -1
        self._requests_seen: Set[Tuple[int, int]] = set()
        self._request_seq = 0
        # consumer
        self.setups = 0
        self.last_setup: SimTime = 0
        self.last_data: SimTime = 0
        self._gap_timer: Optional[EventHandle] = None

    # -- cost field ------------------------------------------------------

    def on_start(self) -> None:
        if self.role is Role.CONSUMER:
            self.setup_cost_field()

    def setup_cost_field(self) -> None:
        """Consumer: start a fresh advertisement flood from cost 0."""
        self.setup_id += 1
        self.setups += 1
        self.cost = 0.0
        self.last_setup = self.ctx.now
        self._advertise()
        self._arm_gap_timer()

    def refresh_cost_field(self, trigger: str) -> None:
        log.debug("consumer %d: refreshing cost field (%s)", self.node_id, trigger)
        self.setup_cost_field()

    def _advertise(self) -> None:
        header = AdvertHeader(self.setup_id, self.cost, self.ctx.position)
        self.ctx.transmit(
            self.ctx.control_packet(PacketKind.ADVERTISEMENT, self.setup_id, header)
        )

    def _on_advert(self, sender: int, packet: Packet) -> None:
        header: AdvertHeader = packet.header
        if self.role is Role.CONSUMER or header.setup_id < self.setup_id:
            return
        if header.setup_id > self.setup_id:
            self.setup_id = header.setup_id
            self.cost = INFINITY
            self.neighbor_costs.clear()
            self.misses = 0
            self.ctx.cancel_timer(self._advert_timer)
            self._advert_timer = None
        self.neighbor_costs[sender] = header.cost
        candidate = header.cost + self.protocol.link_cost(sender, self.node_id)
        if not candidate < self.cost:
            return
        had_route = math.isfinite(self.cost)
        self.cost = candidate
        if self._advert_timer is None:
            self._advert_timer = self.ctx.set_timer(
                self.protocol.advert_backoff, "advert", self.setup_id
            )
        if not had_route and self.role is Role.SOURCE:
            for buffered in self.buffer.drain():
                self.broadcast_data(buffered)

    # -- data ------------------------------------------------------------

    def on_data(self, packet: Packet) -> None:
        if not math.isfinite(self.cost):
            self.buffer.push(packet)
            return
        self.broadcast_data(packet)

    def broadcast_data(self, packet: Packet) -> None:
        """Source: launch a packet with the full credit budget."""
        header = CreditHeader(
            cost_source=self.cost,
            beta=self.protocol.beta,
            e_current=0.0,
            e_min=self.cost,
        )
        self.seen.add(packet.key)
        self.ctx.transmit(replace(packet, header=header))
        self._watch(packet.key, header)

    def _on_data(self, sender: int, packet: Packet) -> None:
        if self.role is Role.CONSUMER:
            self.ctx.consume(packet)
            self.last_data = self.ctx.now
            return
        if self.neighbor_costs.get(sender, INFINITY) < self.cost:
            self.overheard.add(packet.key)
        if packet.key in self.seen:
            return
        header: CreditHeader = packet.header
        spent = header.e_current + self.protocol.link_cost(sender, self.node_id)
        arrived = replace(header, e_current=spent)
        # a rejected copy must not block a cheaper one arriving later
        if decide(arrived, self.cost, self.protocol.threshold).forward:
            self.seen.add(packet.key)
            forwarded = packet.forwarded(e_current=spent, e_min=self.cost)
            self.ctx.transmit(forwarded)
            self._watch(packet.key, forwarded.header)

    # -- upstream death detection ----------------------------------------

    def expected_forwarders(self, header: CreditHeader) -> List[int]:
        """Downhill neighbors whose own credit check accepts our copy."""
        expected = []
        for neighbor, cost in sorted(self.neighbor_costs.items()):
            if not cost < self.cost:
                continue
            spent = header.e_current + self.protocol.link_cost(self.node_id, neighbor)
            arrived = replace(header, e_current=spent)
            if decide(arrived, cost, self.protocol.threshold).forward:
                expected.append(neighbor)
        return expected

    def _watch(self, key: Tuple[int, int], header: CreditHeader) -> None:
        # the consumer never rebroadcasts, so its neighbors cannot check
        if any(cost == 0.0 for cost in self.neighbor_costs.values()):
            return
        if self.expected_forwarders(header):
            self.ctx.set_timer(self.protocol.overhear_timeout, "overhear", key)

    def _on_overhear_timer(self, key: Tuple[int, int]) -> None:
        if key in self.overheard:
            self.overheard.discard(key)
            self.misses = 0
            return
        self.misses += 1
        if self.misses >= self.protocol.miss_limit:
            self.misses = 0
            self.request_refresh()

    def request_refresh(self) -> None:
        """Flood a refresh request toward the consumer, once per setup."""
        if self.requested_setup == self.setup_id:
            return
        self.requested_setup = self.setup_id
        log.debug(
            "node %d: downhill neighbors silent, requesting refresh of setup %d",
            self.node_id,
            self.setup_id,
        )
        request = self.ctx.control_packet(
            PacketKind.REFRESH_REQUEST,
            self._request_seq,
            RefreshRequestHeader(self.setup_id),
        )
        self._request_seq += 1
        self._requests_seen.add(request.key)
        self.ctx.transmit(request)

    def _on_refresh_request(self, packet: Packet) -> None:
        if packet.key in self._requests_seen:
            return
        self._requests_seen.add(packet.key)
        if self.role is Role.CONSUMER:
            header: RefreshRequestHeader = packet.header
            # requests raised against an older setup are stale
            if header.setup_id == self.setup_id:
                self.refresh_cost_field("upstream node death")
            return
        self.ctx.transmit(packet.forwarded())

    # -- refresh trigger -------------------------------------------------

    def _arm_gap_timer(self) -> None:
        if self._gap_timer is not None:
            return
        deadline = max(self.last_setup, self.last_data) + self.protocol.refresh_timeout
        self._gap_timer = self.ctx.set_timer(deadline - self.ctx.now, "gap")

    def _on_gap_timer(self) -> None:
        self._gap_timer = None
        deadline = max(self.last_setup, self.last_data) + self.protocol.refresh_timeout
        if self.ctx.now >= deadline:
            self.refresh_cost_field("data gap")
        else:
            self._arm_gap_timer()

    # -- dispatch --------------------------------------------------------

    def on_timer(self, tag: str, payload: Any) -> None:
        if tag == "advert":
            self._advert_timer = None
            if payload == self.setup_id:
                self._advertise()
        elif tag == "gap":
            self._on_gap_timer()
        elif tag == "overhear":
            self._on_overhear_timer(payload)

    def on_packet(self, sender: int, packet: Packet) -> None:
        if packet.kind is PacketKind.ADVERTISEMENT:
            self._on_advert(sender, packet)
        elif packet.kind is PacketKind.DATA:
            self._on_data(sender, packet)
        elif packet.kind is PacketKind.REFRESH_REQUEST:
            self._on_refresh_request(packet)

    def state_dump(self) -> str:
        return f"cost={self.cost:.6e} setup={self.setup_id}"


class CbddpProtocol(Protocol):
    name = "cbddp"
    node_class = CbddpNode

    def __init__(self, runtime):
        super().__init__(runtime)
        cb = self.settings.cbddp
        self.beta = cb.beta
        self.threshold = cb.threshold
        self.refresh_timeout = self.seconds(cb.refresh_timeout_s)
        self.advert_backoff = self.seconds(cb.advert_backoff_s)
        self.overhear_timeout = self.seconds(cb.overhear_timeout_s)
        self.miss_limit = cb.miss_limit
        self.data_bytes = self.settings.packet.data_bytes

    def link_cost(self, a: int, b: int) -> float:
        """Energy of one data transmission over the a-b link."""
        return self.runtime.network.link_tx_cost(a, b, self.data_bytes)

    def cost_field(self) -> CostField:
        return CostField({node.node_id: node.cost for node in self.runtime.nodes})

    @property
    def setups(self) -> int:
        consumer = self.runtime.consumer_node
        return 0 if consumer is None else consumer.setups
