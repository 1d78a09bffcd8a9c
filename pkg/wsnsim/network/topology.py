"""Topology generation, the disc radio neighbor relation and topology files."""

import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Dict, FrozenSet, List, Optional, Tuple, Union

import networkx as nx
import numpy as np
from pydantic import BaseModel, ConfigDict

from wsnsim.engine import RngStreams
from wsnsim.errors import TopologyError

PLACEMENT_STREAM = "placement"
TARGET_SNINDA = 40.0
DEFAULT_RADIO_RANGE_M = 271.3


class TopologyRow(BaseModel):
    """One row of the benchmark topology suite."""

    model_config = ConfigDict(frozen=True)

    nodes: int
    width: float
    height: float
    cells: int


# node count -> dimensions and the DDDP cell count used for that size
TOPOLOGY_ROWS: Dict[int, TopologyRow] = {
    row.nodes: row
    for row in (
        TopologyRow(nodes=20, width=340, height=340, cells=4),
        TopologyRow(nodes=40, width=511, height=511, cells=9),
        TopologyRow(nodes=60, width=626, height=626, cells=12),
        TopologyRow(nodes=80, width=713, height=713, cells=20),
        TopologyRow(nodes=100, width=810, height=810, cells=23),
        TopologyRow(nodes=120, width=886, height=886, cells=28),
        TopologyRow(nodes=140, width=911, height=911, cells=32),
        TopologyRow(nodes=160, width=994, height=994, cells=37),
    )
}


@dataclass(frozen=True)
class Node:
    id: int
    x: float
    y: float


@dataclass(frozen=True)
class Topology:
    width: float
    height: float
    radio_range: float
    nodes: Tuple[Node, ...]
    source: Optional[int] = None
    consumer: Optional[int] = None

    def __post_init__(self):
        ids = [node.id for node in self.nodes]
        if ids != list(range(len(ids))):
            raise TopologyError("node ids must be 0..S-1 in order")
        for node in self.nodes:
            if not (0 <= node.x <= self.width and 0 <= node.y <= self.height):
                raise TopologyError(f"node {node.id} lies outside the area")
        for role, node_id in (("source", self.source), ("consumer", self.consumer)):
            if node_id is not None and not 0 <= node_id < len(self.nodes):
                raise TopologyError(f"{role} {node_id} is not a node id")

    @property
    def size(self) -> int:
        return len(self.nodes)

    @property
    def area(self) -> float:
        return self.width * self.height

    def position(self, node_id: int) -> Tuple[float, float]:
        node = self.nodes[node_id]
        return node.x, node.y

    def distance(self, a: int, b: int) -> float:
        na, nb = self.nodes[a], self.nodes[b]
        return math.hypot(na.x - nb.x, na.y - nb.y)

    @cached_property
    def _adjacency(self) -> Tuple[FrozenSet[int], ...]:
        if not self.nodes:
            return ()
        xs = np.array([node.x for node in self.nodes])
        ys = np.array([node.y for node in self.nodes])
        dist = np.hypot(xs[:, None] - xs[None, :], ys[:, None] - ys[None, :])
        within = dist <= self.radio_range
        np.fill_diagonal(within, False)
        return tuple(frozenset(np.flatnonzero(row).tolist()) for row in within)

    @cached_property
    def _sorted_adjacency(self) -> Tuple[Tuple[int, ...], ...]:
        return tuple(tuple(sorted(peers)) for peers in self._adjacency)

    def neighbors_of(self, node_id: int) -> FrozenSet[int]:
        if not 0 <= node_id < self.size:
            raise TopologyError(f"unknown node {node_id}")
        return self._adjacency[node_id]

    def sorted_neighbors(self, node_id: int) -> Tuple[int, ...]:
        return self._sorted_adjacency[node_id]

    def mean_degree(self) -> float:
        if not self.nodes:
            return 0.0
        return sum(len(peers) for peers in self._adjacency) / self.size

    def graph(self) -> nx.Graph:
        """Neighbor graph with a `distance` attribute on every edge."""
        graph = nx.Graph()
        for node in self.nodes:
            graph.add_node(node.id, pos=(node.x, node.y))
        for node in self.nodes:
            for peer in self._adjacency[node.id]:
                if peer > node.id:
                    graph.add_edge(node.id, peer, distance=self.distance(node.id, peer))
        return graph

    def dumps(self) -> str:
        def role(node_id: Optional[int]) -> str:
            return "-" if node_id is None else str(node_id)

        # floats throughout so int and float dimensions dump identically
        lines = [
            f"{float(self.width)!r} {float(self.height)!r} "
            f"{float(self.radio_range)!r} {role(self.source)} {role(self.consumer)}"
        ]
        lines.extend(
            f"{node.id} {float(node.x)!r} {float(node.y)!r}" for node in self.nodes
        )
        return "\n".join(lines) + "\n"

    def dump(self, path: Union[str, Path]) -> None:
        Path(path).write_text(self.dumps())


def sninda(node_count: int, area: float, radio_range: float) -> float:
    """Expected neighborhood size: disc area times node density."""
    if area <= 0:
        raise TopologyError("area must be positive")
    return node_count * math.pi * radio_range**2 / area


def range_for_sninda(
    node_count: int, area: float, target: float = TARGET_SNINDA
) -> float:
    """Invert `sninda` for the radio range."""
    if node_count <= 0 or area <= 0:
        raise TopologyError("node count and area must be positive")
    return math.sqrt(target * area / (node_count * math.pi))


def _nearest(xs: np.ndarray, ys: np.ndarray, corner: Tuple[float, float]) -> List[int]:
    dist = np.hypot(xs - corner[0], ys - corner[1])
    # stable sort keeps the lowest id first on exact ties
    return np.argsort(dist, kind="stable").tolist()


def generate_topology(
    node_count: int,
    width: float,
    height: float,
    radio_range: float = DEFAULT_RADIO_RANGE_M,
    seed: int = 0,
) -> Topology:
    """Place nodes i.i.d. uniformly and pick source/consumer at opposite corners."""
    if node_count < 0:
        raise TopologyError("node count must be nonnegative")
    if width <= 0 or height <= 0:
        raise TopologyError("dimensions must be positive")
    if radio_range <= 0:
        raise TopologyError("radio range must be positive")

    rng = RngStreams(seed).stream(PLACEMENT_STREAM)
    xs = rng.uniform(0.0, width, node_count)
    ys = rng.uniform(0.0, height, node_count)
    nodes = tuple(
        Node(i, float(x), float(y)) for i, (x, y) in enumerate(zip(xs, ys))
    )
    if node_count == 0:
        return Topology(width, height, radio_range, nodes)

    source = _nearest(xs, ys, (0.0, 0.0))[0]
    consumer_order = _nearest(xs, ys, (width, height))
    consumer = consumer_order[0]
    if consumer == source and node_count > 1:
        consumer = consumer_order[1]
    return Topology(width, height, radio_range, nodes, source, consumer)


def topology_for_row(
    node_count: int, radio_range: float = DEFAULT_RADIO_RANGE_M, seed: int = 0
) -> Topology:
    row = TOPOLOGY_ROWS.get(node_count)
    if row is None:
        raise TopologyError(
            f"no benchmark row for {node_count} nodes "
            f"(known: {', '.join(map(str, TOPOLOGY_ROWS))})"
        )
    return generate_topology(row.nodes, row.width, row.height, radio_range, seed)


def loads_topology(text: str) -> Topology:
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines:
        raise TopologyError("empty topology file")
    header = lines[0].split()
    if len(header) != 5:
        raise TopologyError(
            "line 1: expected 'width height range source consumer'"
        )

    def role(token: str) -> Optional[int]:
        return None if token == "-" else int(token)

    try:
        width, height, radio_range = (float(v) for v in header[:3])
        source, consumer = role(header[3]), role(header[4])
        nodes = []
        for lineno, line in enumerate(lines[1:], start=2):
            parts = line.split()
            if len(parts) != 3:
                raise TopologyError(f"line {lineno}: expected 'id x y'")
            nodes.append(Node(int(parts[0]), float(parts[1]), float(parts[2])))
    except ValueError as e:
        raise TopologyError(f"malformed topology file: {e}") from e
    return Topology(width, height, radio_range, tuple(nodes), source, consumer)


def load_topology(path: Union[str, Path]) -> Topology:
    return loads_topology(Path(path).read_text())
