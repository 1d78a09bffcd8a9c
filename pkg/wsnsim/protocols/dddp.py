"""Decentralized data dissemination over a consumer-built cell grid.

The consumer floods one construction packet that fixes the grid; nodes
close to the midpoint of a shared cell edge then claim that edge and the
nearest claimant becomes its centralized node (CN). Claims are repeated
every query refresh so dead CNs are replaced.

A query is flooded only inside the consumer's cell (plus `ring` cells
around it after escalation). CNs bordering the flooded area pass it on
to the CNs of adjacent edges farther from the consumer's cell, relaying
greedily toward each one, until a
CN that knows the source (from the source's announcement) sends it the
rest of the way. Every node keeps the first sender of each query as its
reverse hop, and data follows those entries back to the consumer.
"""

import math
from dataclasses import dataclass, field
from typing import Any, Dict, Iterator, List, Optional, Sequence, Set, Tuple

from wsnsim.network.topology import TOPOLOGY_ROWS, Topology
from wsnsim.protocols.base import NodeContext, Protocol, ProtocolNode, Role, SendBuffer
from wsnsim.protocols.packets import Packet, PacketKind
from wsnsim.utils.console import get_logger

log = get_logger(__name__)

Cell = Tuple[int, int]
EdgeKey = Tuple[Cell, Cell]

DEFAULT_CELL_SIDE_M = 170.0


def factor_cells(target: int) -> Tuple[int, int]:
    """Rows x cols for a target cell count.

    rows <= cols <= 2*rows, closest product to `target`, then the squarest.
    """
    if target < 1:
        raise ValueError("cell count must be positive")
    best: Optional[Tuple[int, int, int, int]] = None
    for rows in range(1, math.isqrt(target) + 2):
        for cols in range(rows, 2 * rows + 1):
            candidate = (abs(rows * cols - target), cols - rows, rows, cols)
            if best is None or candidate < best:
                best = candidate
    assert best is not None
    return best[2], best[3]


@dataclass(frozen=True)
class BorderEdge:
    """Shared edge between two cells; `midpoint` is the point its CN serves."""

    cell_a: Cell
    cell_b: Cell
    midpoint: Tuple[float, float]

    @property
    def key(self) -> EdgeKey:
        return self.cell_a, self.cell_b

    def touches(self, cell: Cell) -> bool:
        return cell == self.cell_a or cell == self.cell_b


@dataclass(frozen=True)
class CellGrid:
    width: float
    height: float
    rows: int
    cols: int

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError("grid needs at least one cell")

    @property
    def cell_count(self) -> int:
        return self.rows * self.cols

    @property
    def cell_width(self) -> float:
        return self.width / self.cols

    @property
    def cell_height(self) -> float:
        return self.height / self.rows

    def cell_of(self, x: float, y: float) -> Cell:
        row = min(int(y // self.cell_height), self.rows - 1)
        col = min(int(x // self.cell_width), self.cols - 1)
        return max(row, 0), max(col, 0)

    def cells(self) -> Iterator[Cell]:
        for row in range(self.rows):
            for col in range(self.cols):
                yield row, col

    @staticmethod
    def ring_distance(a: Cell, b: Cell) -> int:
        return max(abs(a[0] - b[0]), abs(a[1] - b[1]))

    @property
    def max_ring(self) -> int:
        return max(self.rows, self.cols) - 1

    def edges(self) -> List[BorderEdge]:
        cw, ch = self.cell_width, self.cell_height
        edges = []
        for row, col in self.cells():
            if col + 1 < self.cols:
                edges.append(
                    BorderEdge(
                        (row, col), (row, col + 1), ((col + 1) * cw, (row + 0.5) * ch)
                    )
                )
            if row + 1 < self.rows:
                edges.append(
                    BorderEdge(
                        (row, col), (row + 1, col), ((col + 0.5) * cw, (row + 1) * ch)
                    )
                )
        return edges


def build_cell_grid(
    topology: Topology,
    cells: Optional[int] = None,
    cell_side_m: Optional[float] = None,
) -> CellGrid:
    """Grid geometry from a target cell count or an explicit side length."""
    if topology.size == 0:
        raise ValueError("cannot build a cell grid on an empty topology")
    if cell_side_m is not None:
        n = max(1, round(topology.width / cell_side_m))
        return CellGrid(topology.width, topology.height, n, n)
    if cells is None:
        row = TOPOLOGY_ROWS.get(topology.size)
        if row is not None:
            cells = row.cells
        else:
            cells = max(1, round(topology.area / DEFAULT_CELL_SIDE_M**2))
    rows, cols = factor_cells(cells)
    return CellGrid(topology.width, topology.height, rows, cols)


def designate_cns(
    grid: CellGrid,
    topology: Topology,
    claim_radius: float,
    alive: Optional[Set[int]] = None,
) -> Dict[EdgeKey, int]:
    """Nearest node within `claim_radius` of each edge midpoint; ties to lowest id."""
    cns: Dict[EdgeKey, int] = {}
    for edge in grid.edges():
        mx, my = edge.midpoint
        best: Optional[Tuple[float, int]] = None
        for node in topology.nodes:
            if alive is not None and node.id not in alive:
                continue
            d = math.hypot(node.x - mx, node.y - my)
            if d <= claim_radius and (best is None or (d, node.id) < best):
                best = (d, node.id)
        if best is not None:
            cns[edge.key] = best[1]
    return cns


class CnDirectory:
    """CN designations of the latest claim round."""

    def __init__(self, grid: CellGrid):
        self.grid = grid
        self.edges = {edge.key: edge for edge in grid.edges()}
        self.round = -1
        self._best: Dict[EdgeKey, Tuple[float, int]] = {}

    def claim(self, round_: int, edge: EdgeKey, node: int, distance: float) -> None:
        if round_ > self.round:
            self.round = round_
            self._best = {}
        elif round_ < self.round:
            return
        current = self._best.get(edge)
        if current is None or (distance, node) < current:
            self._best[edge] = (distance, node)

    def cn_for(self, edge: EdgeKey) -> Optional[int]:
        best = self._best.get(edge)
        return None if best is None else best[1]

    def designations(self) -> Dict[EdgeKey, int]:
        return {edge: best[1] for edge, best in self._best.items()}

    def edges_of(self, node: int) -> List[EdgeKey]:
        return sorted(e for e, best in self._best.items() if best[1] == node)

    def cns_of_cell(self, cell: Cell) -> List[int]:
        return sorted(
            {
                best[1]
                for edge, best in self._best.items()
                if self.edges[edge].touches(cell)
            }
        )

    def adjacent_cns(self, node: int) -> List[int]:
        """CNs of every edge sharing a cell with an edge `node` serves."""
        mine = [self.edges[e] for e in self.edges_of(node)]
        peers: Set[int] = set()
        for edge, best in self._best.items():
            other = self.edges[edge]
            if any(
                other.touches(m.cell_a) or other.touches(m.cell_b) for m in mine
            ):
                peers.add(best[1])
        peers.discard(node)
        return sorted(peers)

    def edge_ring(self, edge: EdgeKey, center: Cell) -> int:
        a, b = edge
        return min(CellGrid.ring_distance(a, center), CellGrid.ring_distance(b, center))

    def node_ring(self, node: int, center: Cell) -> Optional[int]:
        rings = [self.edge_ring(e, center) for e in self.edges_of(node)]
        return min(rings) if rings else None

    def outward_cns(self, node: int, center: Cell) -> List[int]:
        """Adjacent CNs whose nearest edge lies farther from `center` than ours."""
        mine = self.node_ring(node, center)
        if mine is None:
            return []
        outward = []
        for peer in self.adjacent_cns(node):
            ring = self.node_ring(peer, center)
            if ring is not None and ring > mine:
                outward.append(peer)
        return outward


@dataclass(frozen=True)
class ConstructionHeader:
    rows: int
    cols: int


@dataclass(frozen=True)
class ClaimHeader:
    round: int
    edges: Tuple[EdgeKey, ...]


@dataclass(frozen=True)
class QueryHeader:
    query_id: int
    consumer_cell: Cell
    ring: int
    # None while flooding; a CN or the source while relaying
    target: Optional[int] = None


@dataclass(frozen=True)
class AnnounceHeader:
    source_cell: Cell
    target: int


@dataclass(frozen=True)
class DataHeader:
    query_id: int


@dataclass
class ReversePathTable:
    next_hop: Dict[int, int] = field(default_factory=dict)

    def install(self, query_id: int, toward_consumer: int) -> bool:
        if query_id in self.next_hop:
            return False
        self.next_hop[query_id] = toward_consumer
        return True

    def get(self, query_id: int) -> Optional[int]:
        return self.next_hop.get(query_id)


class DddpNode(ProtocolNode):
    protocol: "DddpProtocol"

    def __init__(self, ctx: NodeContext, protocol: "DddpProtocol"):
        super().__init__(ctx, protocol)
        self.cell = protocol.grid.cell_of(*ctx.position)
        self.constructed = False
        self.claim_round = 0
        self.reverse = ReversePathTable()
        self.flooded: Set[int] = set()
        self.cn_seen: Set[int] = set()
        self.announcements: Dict[int, Cell] = {}
        # source
        self.active_query: Optional[int] = None
        self.buffer = SendBuffer(protocol.settings.dddp.buffer_size)
        # consumer
        self.query_id = -1
        self.ring = 0
        self.data_since_query = False

    # -- construction and CN election ------------------------------------

    def on_start(self) -> None:
        if self.role is Role.CONSUMER:
            grid = self.protocol.grid
            header = ConstructionHeader(grid.rows, grid.cols)
            self.ctx.transmit(
                self.ctx.control_packet(PacketKind.CELL_CONSTRUCTION, 0, header)
            )
            self._joined()
            self.ctx.set_timer(self.protocol.settle, "query")

    def _joined(self) -> None:
        self.constructed = True
        self._claim()
        if self.role is Role.SOURCE:
            self.ctx.set_timer(self.protocol.settle // 2, "announce")

    def _claim(self) -> None:
        claimed = self.protocol.claimable_edges(self.node_id)
        if claimed:
            for edge, distance in claimed:
                self.protocol.directory.claim(
                    self.claim_round, edge, self.node_id, distance
                )
            header = ClaimHeader(self.claim_round, tuple(e for e, _ in claimed))
            self.ctx.transmit(
                self.ctx.control_packet(
                    PacketKind.CELL_CONSTRUCTION, self.claim_round + 1, header
                )
            )
        self.claim_round += 1
        self.ctx.set_timer(self.protocol.query_refresh, "claim")

    def _on_construction(self, sender: int, packet: Packet) -> None:
        if not isinstance(packet.header, ConstructionHeader) or self.constructed:
            return
        self.ctx.transmit(packet.forwarded())
        self._joined()

    @property
    def is_cn(self) -> bool:
        return bool(self.protocol.directory.edges_of(self.node_id))

    # -- source announcement ---------------------------------------------

    def announce(self) -> None:
        for cn in self.protocol.directory.cns_of_cell(self.cell):
            if cn == self.node_id:
                self.announcements[self.node_id] = self.cell
                continue
            packet = self.ctx.control_packet(
                PacketKind.ADVERTISEMENT,
                self.claim_round,
                AnnounceHeader(self.cell, cn),
            )
            self.relay_toward(packet, cn)
        self.ctx.set_timer(self.protocol.query_refresh, "announce")

    def _on_announcement(self, sender: int, packet: Packet) -> None:
        header: AnnounceHeader = packet.header
        if header.target == self.node_id:
            self.announcements[packet.origin] = header.source_cell
        else:
            self.relay_toward(packet.forwarded(), header.target)

    def relay_toward(self, packet: Packet, target: int) -> bool:
        """Unicast one hop of a greedy geographic relay toward `target`."""
        next_hop = self.protocol.greedy_next_hop(self.node_id, target)
        if next_hop is None:
            self.ctx.routing_failure()
            return False
        self.ctx.transmit(packet, next_hop)
        return True

    # -- consumer: queries and escalation --------------------------------

    def send_query(self) -> None:
        grid = self.protocol.grid
        if self.query_id >= 0 and not self.data_since_query:
            self.ring = min(self.ring + 1, grid.max_ring)
            log.debug(
                "consumer %d: no data, widening query ring to %d",
                self.node_id,
                self.ring,
            )
        ring = self.ring
        if not self.protocol.directory.cns_of_cell(self.cell):
            ring = min(max(ring, 1), grid.max_ring)
        self.query_id += 1
        self.data_since_query = False
        header = QueryHeader(self.query_id, self.cell, ring)
        self.flooded.add(self.query_id)
        self.ctx.transmit(
            self.ctx.control_packet(PacketKind.QUERY, self.query_id, header)
        )
        self.ctx.set_timer(self.protocol.query_refresh, "query")

    def flood_query_in_cell(self, packet: Packet) -> None:
        header: QueryHeader = packet.header
        if header.query_id in self.flooded:
            return
        self.flooded.add(header.query_id)
        distance = CellGrid.ring_distance(self.cell, header.consumer_cell)
        if distance <= header.ring:
            self.ctx.transmit(packet.forwarded())

    def _borders_flood(self, header: QueryHeader) -> bool:
        directory = self.protocol.directory
        for key in directory.edges_of(self.node_id):
            edge = directory.edges[key]
            for cell in (edge.cell_a, edge.cell_b):
                if CellGrid.ring_distance(cell, header.consumer_cell) <= header.ring:
                    return True
        return False

    def _on_query(self, sender: int, packet: Packet) -> None:
        if self.role is Role.CONSUMER:
            return
        header: QueryHeader = packet.header
        first = self.reverse.install(header.query_id, sender)
        if first and self.role is Role.SOURCE:
            self._activate(header.query_id)

        if header.target is None:
            self.flood_query_in_cell(packet)
            if self.is_cn and self._borders_flood(header):
                self.forward_query_cn(packet)
        elif header.target == self.node_id:
            if self.is_cn:
                self.forward_query_cn(packet)
        else:
            self.relay_toward(packet.forwarded(), header.target)

    def forward_query_cn(self, packet: Packet) -> None:
        header: QueryHeader = packet.header
        if header.query_id in self.cn_seen:
            return
        self.cn_seen.add(header.query_id)
        if self.announcements:
            for source, source_cell in sorted(self.announcements.items()):
                if source_cell == header.consumer_cell or source == self.node_id:
                    continue
                self.relay_toward(packet.forwarded(target=source), source)
            return
        # the chain only moves away from the consumer's cell
        directory = self.protocol.directory
        for cn in directory.outward_cns(self.node_id, header.consumer_cell):
            self.relay_toward(packet.forwarded(target=cn), cn)

    # -- data along reverse entries --------------------------------------

    def _activate(self, query_id: int) -> None:
        if self.active_query is not None and query_id <= self.active_query:
            return
        self.active_query = query_id
        for buffered in self.buffer.drain():
            self.deliver_data_reverse(buffered)

    def on_data(self, packet: Packet) -> None:
        if self.active_query is None:
            self.buffer.push(packet)
            return
        self.deliver_data_reverse(packet)

    def deliver_data_reverse(self, packet: Packet) -> None:
        query_id = self.active_query
        next_hop = self.reverse.get(query_id)
        if next_hop is None:
            self.buffer.push(packet)
            return
        self.ctx.transmit(
            Packet(
                kind=PacketKind.DATA,
                origin=packet.origin,
                seq=packet.seq,
                size=packet.size,
                header=DataHeader(query_id),
            ),
            next_hop,
        )

    def _on_data(self, sender: int, packet: Packet) -> None:
        if self.role is Role.CONSUMER:
            self.ctx.consume(packet)
            self.data_since_query = True
            return
        next_hop = self.reverse.get(packet.header.query_id)
        if next_hop is None or packet.hop_count > self.protocol.max_hops:
            self.ctx.routing_failure()
            return
        self.ctx.transmit(packet.forwarded(), next_hop)

    # -- dispatch --------------------------------------------------------

    def on_timer(self, tag: str, payload: Any) -> None:
        if tag == "claim":
            self._claim()
        elif tag == "query":
            self.send_query()
        elif tag == "announce":
            self.announce()

    def on_packet(self, sender: int, packet: Packet) -> None:
        kind = packet.kind
        if kind is PacketKind.CELL_CONSTRUCTION:
            self._on_construction(sender, packet)
        elif kind is PacketKind.QUERY:
            self._on_query(sender, packet)
        elif kind is PacketKind.ADVERTISEMENT:
            self._on_announcement(sender, packet)
        elif kind is PacketKind.DATA:
            self._on_data(sender, packet)

    def state_dump(self) -> str:
        my_edges = self.protocol.directory.edges_of(self.node_id)
        edges = ";".join(f"{a}-{b}" for a, b in my_edges)
        reverse = ",".join(f"{q}:{n}" for q, n in sorted(self.reverse.next_hop.items()))
        return f"cell={self.cell} cn={edges or '-'} reverse={reverse or '-'}"


class DddpProtocol(Protocol):
    name = "dddp"
    node_class = DddpNode

    def __init__(self, runtime):
        super().__init__(runtime)
        dd = self.settings.dddp
        self.grid = build_cell_grid(self.topology, dd.cells, dd.cell_side_m)
        self.claim_radius = dd.claim_radius_factor * self.topology.radio_range
        self.directory = CnDirectory(self.grid)
        self.query_refresh = self.seconds(dd.query_refresh_s)
        self.settle = self.seconds(dd.settle_s)
        self.max_hops = 4 * max(1, self.topology.size)
        self._claimable = self._claimable_edges()
        log.debug(
            "dddp grid %dx%d (%.1f x %.1f m cells)",
            self.grid.rows,
            self.grid.cols,
            self.grid.cell_width,
            self.grid.cell_height,
        )

    def _claimable_edges(self) -> Dict[int, List[Tuple[EdgeKey, float]]]:
        claimable: Dict[int, List[Tuple[EdgeKey, float]]] = {}
        for edge in self.grid.edges():
            mx, my = edge.midpoint
            for node in self.topology.nodes:
                d = math.hypot(node.x - mx, node.y - my)
                if d <= self.claim_radius:
                    claimable.setdefault(node.id, []).append((edge.key, d))
        return claimable

    def claimable_edges(self, node: int) -> Sequence[Tuple[EdgeKey, float]]:
        return self._claimable.get(node, ())

    def greedy_next_hop(self, node: int, target: int) -> Optional[int]:
        """Neighbor strictly closer to `target`, the target itself if in range."""
        topology = self.topology
        neighbors = topology.sorted_neighbors(node)
        if target in topology.neighbors_of(node):
            return target
        best: Optional[Tuple[float, int]] = None
        here = topology.distance(node, target)
        for peer in neighbors:
            d = topology.distance(peer, target)
            if d < here and (best is None or (d, peer) < best):
                best = (d, peer)
        return None if best is None else best[1]
