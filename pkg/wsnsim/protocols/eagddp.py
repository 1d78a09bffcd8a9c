"""Energy-aware geographic dissemination toward a target region.

Outside the region a packet goes to the neighbor minimizing learned cost
plus link cost; neighbors without a learned value are scored by the
estimated cost, a blend of distance to the region centroid and consumed
energy, and learned values carry the same weighted energy term so busy
neighbors lose their advantage. The forwarding node then adopts that
minimum as its own learned cost. Nodes inside the region advertise a
learned cost of 0 when they start.

Inside the region the packet is spread by recursive quadrant splitting:
one copy goes toward the node nearest each quadrant centroid, which
repeats the split on its quadrant. Copies travel greedily toward
their target; a relay with no closer neighbor records its distance and the
copy follows shortest hop paths until it is closer than that.

Distances are measured in radio ranges, consumed energy as a fraction of
the initial energy and link cost as a unicast over the link relative to a
full-range transmission.
"""

import math
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Dict, Iterable, List, Optional, Set, Tuple

import networkx as nx

from wsnsim.engine import EventHandle, SimTime
from wsnsim.protocols.base import NodeContext, Protocol, ProtocolNode, Role
from wsnsim.protocols.packets import Packet, PacketKind
from wsnsim.utils.console import get_logger

log = get_logger(__name__)

# rectangles narrower than this are not split further
MIN_SPLIT_M = 1e-3


@dataclass(frozen=True)
class TargetRegion:
    x0: float
    y0: float
    x1: float
    y1: float
    # an open edge lies on a parent split line owned by the next quadrant
    open_x1: bool = False
    open_y1: bool = False

    @classmethod
    def around(cls, center: Tuple[float, float], side: float) -> "TargetRegion":
        half = side / 2
        x, y = center
        return cls(x - half, y - half, x + half, y + half)

    @property
    def centroid(self) -> Tuple[float, float]:
        return (self.x0 + self.x1) / 2, (self.y0 + self.y1) / 2

    @property
    def width(self) -> float:
        return self.x1 - self.x0

    def contains(self, x: float, y: float) -> bool:
        in_x = self.x0 <= x and (x < self.x1 if self.open_x1 else x <= self.x1)
        in_y = self.y0 <= y and (y < self.y1 if self.open_y1 else y <= self.y1)
        return in_x and in_y

    def quadrants(self) -> Tuple["TargetRegion", ...]:
        xm, ym = self.centroid
        return (
            TargetRegion(self.x0, self.y0, xm, ym, True, True),
            TargetRegion(xm, self.y0, self.x1, ym, self.open_x1, True),
            TargetRegion(self.x0, ym, xm, self.y1, True, self.open_y1),
            TargetRegion(xm, ym, self.x1, self.y1, self.open_x1, self.open_y1),
        )

    def quadrant_index(self, x: float, y: float) -> int:
        xm, ym = self.centroid
        return (1 if x >= xm else 0) + (2 if y >= ym else 0)


def estimated_cost(
    position: Tuple[float, float],
    centroid: Tuple[float, float],
    consumed: float,
    mu: float,
    distance_unit: float = 1.0,
    energy_unit: float = 1.0,
) -> float:
    """mu * d(N, D) + (1 - mu) * e_c(N), each term in its own unit."""
    d = math.hypot(position[0] - centroid[0], position[1] - centroid[1])
    return mu * d / distance_unit + (1 - mu) * consumed / energy_unit


@dataclass
class NeighborCost:
    learned: Optional[float] = None
    consumed: float = 0.0


@dataclass
class CostTable:
    learned: Optional[float] = None
    neighbors: Dict[int, NeighborCost] = field(default_factory=dict)

    def observe(self, neighbor: int, learned: Optional[float], consumed: float) -> None:
        entry = self.neighbors.setdefault(neighbor, NeighborCost())
        if learned is not None:
            entry.learned = learned
        entry.consumed = consumed

    def cost_of(
        self,
        neighbor: int,
        estimate: Callable[[int, float], float],
        energy_penalty: Optional[Callable[[float], float]] = None,
    ) -> float:
        """Learned cost (plus the energy penalty) if known, else the estimate."""
        entry = self.neighbors.get(neighbor)
        if entry is None:
            return estimate(neighbor, 0.0)
        if entry.learned is not None:
            if energy_penalty is None:
                return entry.learned
            return entry.learned + energy_penalty(entry.consumed)
        return estimate(neighbor, entry.consumed)


def select_next_hop(
    table: CostTable,
    candidates: Iterable[int],
    estimate: Callable[[int, float], float],
    link_cost: Callable[[int], float],
    energy_penalty: Optional[Callable[[float], float]] = None,
) -> Optional[Tuple[int, float]]:
    """(N_min, l(N_min) + C(N, N_min)); ties go to the lowest id."""
    best: Optional[Tuple[float, int]] = None
    for neighbor in candidates:
        total = table.cost_of(neighbor, estimate, energy_penalty) + link_cost(neighbor)
        if best is None or (total, neighbor) < best:
            best = (total, neighbor)
    if best is None:
        return None
    return best[1], best[0]


def update_learned_cost(table: CostTable, total: float) -> bool:
    """l(N) := l(N_min) + C(N, N_min); True when the value changed."""
    changed = table.learned != total
    table.learned = total
    return changed


@dataclass(frozen=True)
class RouteHeader:
    learned: Optional[float]
    consumed: float


@dataclass(frozen=True)
class RestrictedHeader:
    learned: Optional[float]
    consumed: float
    rect: TargetRegion
    target: int
    # distance to the target where greedy relaying got stuck
    stuck_at: Optional[float] = None


@dataclass(frozen=True)
class CostUpdateHeader:
    learned: Optional[float]
    consumed: float


class EagddpNode(ProtocolNode):
    protocol: "EagddpProtocol"

    def __init__(self, ctx: NodeContext, protocol: "EagddpProtocol"):
        super().__init__(ctx, protocol)
        self.table = CostTable()
        self.in_region = protocol.region.contains(*ctx.position)
        if self.in_region:
            self.table.learned = 0.0
        self.dead: Set[int] = set()
        self.restricted_done: Set[Tuple[Tuple[int, int], TargetRegion]] = set()
        self._advert_timer: Optional[EventHandle] = None
        self._advert_seq = 0
        self._last_advert_at: Optional[SimTime] = None
        self._last_advert_consumed = 0.0

    @property
    def learned(self) -> Optional[float]:
        return self.table.learned

    # -- cost advertisement ----------------------------------------------

    def on_start(self) -> None:
        # anchors the learned costs of the neighbors outside the region
        if self.in_region:
            self._request_advert()

    def _request_advert(self) -> None:
        if self._advert_timer is not None:
            return
        delay = 0
        if self._last_advert_at is not None:
            next_allowed = self._last_advert_at + self.protocol.advert_interval
            delay = max(0, next_allowed - self.ctx.now)
        self._advert_timer = self.ctx.set_timer(delay, "advert")

    def _advertise(self) -> None:
        self._advert_timer = None
        self._advert_seq += 1
        consumed = self.ctx.consumed_energy
        header = CostUpdateHeader(self.table.learned, consumed)
        self.ctx.transmit(
            self.ctx.control_packet(PacketKind.COST_UPDATE, self._advert_seq, header)
        )
        self._last_advert_at = self.ctx.now
        self._last_advert_consumed = consumed

    def _after_transmit(self) -> None:
        spent = self.ctx.consumed_energy - self._last_advert_consumed
        if spent >= self.protocol.energy_step:
            self._request_advert()

    def _observe(self, sender: int, header: Any) -> None:
        self.table.observe(sender, header.learned, header.consumed)

    # -- routing toward the region ---------------------------------------

    def candidates(self) -> List[int]:
        return [n for n in self.ctx.neighbors if n not in self.dead]

    def select_next_hop(self) -> Optional[Tuple[int, float]]:
        return select_next_hop(
            self.table,
            self.candidates(),
            self.protocol.estimate,
            lambda peer: self.protocol.link_cost(self.node_id, peer),
            self.protocol.energy_penalty,
        )

    def route_to_region(self, packet: Packet) -> None:
        if packet.hop_count > self.protocol.max_hops:
            log.debug(
                "node %d: dropping %s after %d hops",
                self.node_id,
                packet.key,
                packet.hop_count,
            )
            self.ctx.routing_failure()
            return
        choice = self.select_next_hop()
        if choice is None:
            self.ctx.routing_failure()
            return
        next_hop, total = choice
        if update_learned_cost(self.table, total):
            self._request_advert()
        header = RouteHeader(self.table.learned, self.ctx.consumed_energy)
        self.ctx.transmit(replace(packet, header=header), next_hop)
        self._after_transmit()

    # -- restricted forwarding inside the region -------------------------

    def restricted_forward(self, packet: Packet, rect: TargetRegion) -> None:
        done_key = (packet.key, rect)
        if done_key in self.restricted_done:
            return
        self.restricted_done.add(done_key)
        members = self.protocol.members(rect)
        others = [n for n in members if n != self.node_id]
        if not others:
            return
        if rect.width < MIN_SPLIT_M:
            for other in others:
                self._send_restricted(packet, rect, other)
            return
        for quadrant, quadrant_members in self.protocol.partition(rect, members):
            if self.node_id in quadrant_members:
                self.restricted_forward(packet, quadrant)
                continue
            target = self.protocol.nearest_to(quadrant.centroid, quadrant_members)
            self._send_restricted(packet, quadrant, target)

    def _send_restricted(self, packet: Packet, rect: TargetRegion, target: int) -> None:
        header = RestrictedHeader(
            self.table.learned, self.ctx.consumed_energy, rect, target
        )
        self._relay(replace(packet, header=header), target)

    def _relay(self, packet: Packet, target: int) -> None:
        header: RestrictedHeader = packet.header
        here = self.ctx.distance_to(target)
        stuck_at = header.stuck_at
        if stuck_at is not None and here < stuck_at:
            stuck_at = None
        next_hop = None
        if stuck_at is None:
            next_hop = self.protocol.greedy_hop(self.node_id, target, self.dead)
            if next_hop is None:
                stuck_at = here
        if stuck_at is not None:
            next_hop = self.protocol.fallback_hop(self.node_id, target, self.dead)
        if next_hop is None:
            self.ctx.routing_failure()
            return
        if stuck_at != header.stuck_at:
            packet = replace(packet, header=replace(header, stuck_at=stuck_at))
        self.ctx.transmit(packet, next_hop)
        self._after_transmit()

    # -- callbacks -------------------------------------------------------

    def on_data(self, packet: Packet) -> None:
        if self.in_region:
            self.restricted_forward(packet, self.protocol.region)
        else:
            self.route_to_region(packet)

    def _on_data(self, sender: int, packet: Packet) -> None:
        header = packet.header
        self._observe(sender, header)
        if self.role is Role.CONSUMER:
            self.ctx.consume(packet)
        if isinstance(header, RestrictedHeader):
            if header.target == self.node_id:
                self.restricted_forward(packet, header.rect)
            elif packet.hop_count > self.protocol.max_hops:
                self.ctx.routing_failure()
            else:
                self._relay(packet.forwarded(), header.target)
        elif self.in_region:
            self.restricted_forward(packet, self.protocol.region)
        else:
            self.route_to_region(packet.forwarded())

    def on_link_failure(self, neighbor: int, packet: Packet) -> None:
        self.dead.add(neighbor)
        if packet.kind is not PacketKind.DATA:
            return
        if isinstance(packet.header, RestrictedHeader):
            self._relay(packet, packet.header.target)
        else:
            self.route_to_region(packet)

    def on_timer(self, tag: str, payload: Any) -> None:
        if tag == "advert":
            self._advertise()

    def on_packet(self, sender: int, packet: Packet) -> None:
        if packet.kind is PacketKind.COST_UPDATE:
            self._observe(sender, packet.header)
        elif packet.kind is PacketKind.DATA:
            self._on_data(sender, packet)

    def state_dump(self) -> str:
        learned = "-" if self.table.learned is None else f"{self.table.learned:.6f}"
        dead = ",".join(map(str, sorted(self.dead))) or "-"
        return f"learned={learned} region={int(self.in_region)} dead={dead}"


class EagddpProtocol(Protocol):
    name = "eagddp"
    node_class = EagddpNode

    def __init__(self, runtime):
        super().__init__(runtime)
        eg = self.settings.eagddp
        topology = self.topology
        self.mu = eg.mu
        side = eg.region_side_m or 2 * topology.radio_range
        if topology.consumer is not None:
            center = topology.position(topology.consumer)
        else:
            center = (topology.width / 2, topology.height / 2)
        self.region = TargetRegion.around(center, side)
        self.advert_interval = self.seconds(eg.advert_interval_s)
        self.energy_step = eg.energy_advert_step * self.settings.energy.initial_j
        self.max_hops = eg.loop_factor * max(1, topology.size)
        self._data_bytes = self.settings.packet.data_bytes
        self._full_range_cost = runtime.network.energy_model.tx_cost(
            self._data_bytes, topology.radio_range
        )
        self._graph: Optional[nx.Graph] = None

    def estimate(self, neighbor: int, consumed: float) -> float:
        return estimated_cost(
            self.topology.position(neighbor),
            self.region.centroid,
            consumed,
            self.mu,
            distance_unit=self.topology.radio_range,
            energy_unit=self.settings.energy.initial_j,
        )

    def link_cost(self, a: int, b: int) -> float:
        """C(a, b): unicast cost relative to a full-range transmission."""
        return (
            self.runtime.network.link_tx_cost(a, b, self._data_bytes)
            / self._full_range_cost
        )

    def members(self, rect: TargetRegion) -> List[int]:
        return [n.id for n in self.topology.nodes if rect.contains(n.x, n.y)]

    def partition(
        self, rect: TargetRegion, members: List[int]
    ) -> List[Tuple[TargetRegion, List[int]]]:
        """Assign every member to exactly one quadrant; empty quadrants are skipped."""
        quadrants = rect.quadrants()
        buckets: List[List[int]] = [[] for _ in quadrants]
        for node_id in members:
            x, y = self.topology.position(node_id)
            buckets[rect.quadrant_index(x, y)].append(node_id)
        return [(q, b) for q, b in zip(quadrants, buckets) if b]

    def nearest_to(self, point: Tuple[float, float], candidates: List[int]) -> int:
        def key(node_id: int) -> Tuple[float, int]:
            x, y = self.topology.position(node_id)
            return math.hypot(x - point[0], y - point[1]), node_id

        return min(candidates, key=key)

    def energy_penalty(self, consumed: float) -> float:
        """(1 - mu) * e_c in units of the initial energy."""
        return (1 - self.mu) * consumed / self.settings.energy.initial_j

    def relay_next_hop(
        self, node: int, target: int, exclude: Set[int]
    ) -> Optional[int]:
        """Greedy step toward `target`, else the first hop of a shortest path."""
        greedy = self.greedy_hop(node, target, exclude)
        if greedy is not None:
            return greedy
        return self.fallback_hop(node, target, exclude)

    def greedy_hop(self, node: int, target: int, exclude: Set[int]) -> Optional[int]:
        """The target itself, else the neighbor closest to it among those closer."""
        topology = self.topology
        if target in topology.neighbors_of(node) and target not in exclude:
            return target
        here = topology.distance(node, target)
        best: Optional[Tuple[float, int]] = None
        for peer in topology.sorted_neighbors(node):
            if peer in exclude:
                continue
            d = topology.distance(peer, target)
            if d < here and (best is None or (d, peer) < best):
                best = (d, peer)
        return None if best is None else best[1]

    def fallback_hop(self, node: int, target: int, exclude: Set[int]) -> Optional[int]:
        """First hop of a hop-shortest path avoiding the neighbors known dead."""
        if self._graph is None:
            self._graph = self.topology.graph()
        usable = nx.subgraph_view(
            self._graph, filter_node=lambda n: n == node or n not in exclude
        )
        try:
            path = nx.shortest_path(usable, node, target)
        except (nx.NetworkXNoPath, nx.NodeNotFound):
            return None
        return path[1] if len(path) > 1 else None
