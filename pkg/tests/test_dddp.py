"""Cell grid geometry, CN election, query flooding and reverse paths."""

import pytest

from tests.helpers import RANGE_M, line_topology, run_protocol
from wsnsim.commands.studies import cell_study
from wsnsim.metrics import transmissions_by_kind
from wsnsim.network.topology import Node, Topology, topology_for_row
from wsnsim.protocols.dddp import (
    CellGrid,
    CnDirectory,
    ReversePathTable,
    build_cell_grid,
    designate_cns,
    factor_cells,
)


def lattice_topology() -> Topology:
    """3x3 nodes 125 m apart; source in the lower-left corner, consumer upper-right."""
    nodes = tuple(
        Node(3 * row + col, 25.0 + 125.0 * col, 25.0 + 125.0 * row)
        for row in range(3)
        for col in range(3)
    )
    return Topology(300.0, 300.0, RANGE_M, nodes, source=0, consumer=8)


@pytest.mark.parametrize(
    "target, shape",
    [
        (1, (1, 1)),
        (4, (2, 2)),
        (9, (3, 3)),
        (12, (3, 4)),
        (16, (4, 4)),
        (20, (4, 5)),
        (23, (4, 6)),
        (28, (4, 7)),
        (32, (4, 8)),
        (37, (6, 6)),
    ],
)
def test_factor_cells(target, shape):
    assert factor_cells(target) == shape


def test_factor_cells_rejects_zero():
    with pytest.raises(ValueError):
        factor_cells(0)


def test_grid_from_benchmark_rows():
    grid = build_cell_grid(topology_for_row(20, seed=1), cells=4)
    assert (grid.rows, grid.cols) == (2, 2)
    assert grid.cell_width == 170
    grid = build_cell_grid(topology_for_row(40, seed=1))
    assert (grid.rows, grid.cols) == (3, 3)
    assert grid.cell_width == pytest.approx(170.33, abs=0.01)


def test_grid_from_cell_side():
    grid = build_cell_grid(topology_for_row(20, seed=1), cell_side_m=170)
    assert (grid.rows, grid.cols) == (2, 2)


def test_cell_of_clamps_to_the_far_border():
    grid = CellGrid(300, 300, 3, 3)
    assert grid.cell_of(0, 0) == (0, 0)
    assert grid.cell_of(150, 50) == (0, 1)
    assert grid.cell_of(300, 300) == (2, 2)


def test_edges_and_midpoints():
    grid = CellGrid(300, 300, 3, 3)
    edges = grid.edges()
    assert len(edges) == 12
    first = edges[0]
    assert first.key == ((0, 0), (0, 1))
    assert first.midpoint == (100, 50)
    assert CellGrid(300, 300, 1, 1).edges() == []
    assert grid.max_ring == 2
    assert CellGrid.ring_distance((0, 0), (2, 1)) == 2


def test_designate_cns_nearest_with_lowest_id_ties():
    grid = CellGrid(200, 100, 1, 2)
    # both nodes 10 m from the (100, 50) midpoint
    nodes = (Node(0, 110, 50), Node(1, 90, 50), Node(2, 10, 10))
    topology = Topology(200, 100, RANGE_M, nodes)
    assert designate_cns(grid, topology, claim_radius=50) == {((0, 0), (0, 1)): 0}
    assert designate_cns(grid, topology, claim_radius=50, alive={1, 2}) == {
        ((0, 0), (0, 1)): 1
    }
    assert designate_cns(grid, topology, claim_radius=5) == {}


def test_directory_keeps_only_latest_round():
    directory = CnDirectory(CellGrid(200, 100, 1, 2))
    edge = ((0, 0), (0, 1))
    directory.claim(0, edge, 3, 10.0)
    directory.claim(0, edge, 4, 5.0)
    assert directory.cn_for(edge) == 4
    directory.claim(1, edge, 3, 10.0)
    assert directory.cn_for(edge) == 3
    directory.claim(0, edge, 4, 5.0)
    assert directory.cn_for(edge) == 3
    assert directory.cns_of_cell((0, 1)) == [3]


def test_reverse_path_first_entry_wins():
    table = ReversePathTable()
    assert table.install(0, 5)
    assert not table.install(0, 6)
    assert table.get(0) == 5
    assert table.get(1) is None


def test_single_cell_floods_the_whole_network():
    runtime = run_protocol(
        "dddp", line_topology(), {"simulation.duration_s": 20, "dddp.cells": 1}
    )
    ledger = runtime.ledger
    # construction x3, query x3, no claims without border edges
    assert sum(ledger.routing_tx) == 6
    assert sum(ledger.data_tx) == 20
    assert ledger.sent == ledger.received == 10


def test_election_matches_nearest_node_oracle():
    topology = lattice_topology()
    runtime = run_protocol(
        "dddp", topology, {"simulation.duration_s": 20, "dddp.cells": 4}
    )
    protocol = runtime.protocol
    expected = designate_cns(protocol.grid, topology, protocol.claim_radius)
    assert protocol.directory.designations() == expected
    assert sorted(expected.values()) == [1, 3, 5, 7]
    assert runtime.ledger.received == runtime.ledger.sent


def test_reverse_paths_lead_to_consumer_without_cycles():
    topology = topology_for_row(40, seed=1)
    runtime = run_protocol("dddp", topology, {"simulation.duration_s": 100})
    consumer = topology.consumer
    checked = 0
    for node in runtime.nodes:
        for query_id in node.reverse.next_hop:
            hop, visited = node.node_id, set()
            while hop != consumer:
                assert hop not in visited
                visited.add(hop)
                hop = runtime.nodes[hop].reverse.get(query_id)
                assert hop is not None
            checked += 1
    assert checked > 0


def test_query_ring_widens_while_no_data_arrives():
    runtime = run_protocol(
        "dddp",
        lattice_topology(),
        {"simulation.duration_s": 100, "dddp.cells": 9},
        faults=[(0, 0.0)],
    )
    consumer = runtime.consumer_node
    # queries at 1, 31, 61 and 91 s; the ring is bounded by the 3x3 grid
    assert consumer.query_id == 3
    assert consumer.ring == 2
    assert runtime.ledger.received == 0


def test_greedy_relay_steps_toward_target():
    runtime = run_protocol("dddp", line_topology(), {"simulation.duration_s": 1})
    protocol = runtime.protocol
    assert protocol.greedy_next_hop(2, 0) == 1
    assert protocol.greedy_next_hop(1, 0) == 0


def test_cn_chain_only_moves_away_from_consumer_cell():
    grid = CellGrid(510, 510, 3, 3)
    directory = CnDirectory(grid)
    # node i serves the i-th edge
    for node, edge in enumerate(grid.edges()):
        directory.claim(0, edge.key, node, 1.0)
    consumer_cell = (2, 2)
    assert directory.edge_ring(((1, 2), (2, 2)), consumer_cell) == 0
    assert directory.outward_cns(9, consumer_cell) == [4, 7]
    assert directory.outward_cns(11, consumer_cell) == [8, 10]
    # the far corner edges have nowhere left to go
    assert directory.outward_cns(0, consumer_cell) == []
    assert directory.outward_cns(99, consumer_cell) == []


def test_nine_cells_send_fewer_queries_than_one():
    study = dict(cell_study(40, 1, (1, 9), duration=100))

    def query_tx(count: int) -> int:
        outcome = study[count]
        assert outcome.result.ok
        return transmissions_by_kind(outcome.runtime.sim.trace)["query"]

    # queries at 1, 31, 61 and 91 s reach all 40 nodes with one cell
    assert query_tx(1) == 4 * 40
    assert query_tx(9) < query_tx(1)
