"""Setup phase: converge-cast to the router, adjacency matrices at the
controller, and broadcast of the complete node information back to the nodes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .topology import ROUTER_ID, ClusterTopology, GossipEntry, NodeId


class ControlPlaneError(Exception):
    pass


class DuplicateCluster(ControlPlaneError):
    pass


class UnknownCluster(ControlPlaneError):
    pass


class AsymmetricReports(ControlPlaneError):
    pass


@dataclass(frozen=True)
class NeighborReport:
    cluster_number: int
    node_label: str
    node_id: NodeId
    neighbor_ids: tuple[NodeId, ...]
    depths: tuple[int, ...]
    current_destination: NodeId
    final_destination: NodeId


@dataclass(frozen=True)
class RouterTable:
    cluster_number: int
    reports: tuple[NeighborReport, ...]


@dataclass(frozen=True)
class ControllerRecord:
    cluster_number: int
    node_label: str
    node_id: NodeId
    neighbor_ids: tuple[NodeId, ...]
    depths: tuple[int, ...]
    source_id: NodeId
    destination_id: NodeId


@dataclass(frozen=True)
class ControllerTable:
    clusters: tuple[int, ...]
    records: tuple[ControllerRecord, ...]

    def for_cluster(self, cluster_number: int) -> list[ControllerRecord]:
        if cluster_number not in self.clusters:
            raise UnknownCluster(f"cluster {cluster_number} not in controller table")
        return [r for r in self.records if r.cluster_number == cluster_number]


@dataclass(frozen=True)
class AdjacencyMatrix:
    cluster_number: int
    ids: tuple[NodeId, ...]
    labels: tuple[str, ...]
    cells: np.ndarray = field(compare=False)

    def __eq__(self, other):
        if not isinstance(other, AdjacencyMatrix):
            return NotImplemented
        return (self.cluster_number, self.ids, self.labels) == (
            other.cluster_number, other.ids, other.labels
        ) and np.array_equal(self.cells, other.cells)

    def row(self, node_id: NodeId) -> list[int]:
        return [int(c) for c in self.cells[self.ids.index(node_id)]]

    def degree(self) -> np.ndarray:
        return self.cells.sum(axis=1)


@dataclass(frozen=True)
class CompleteInfoRecord:
    node_label: str
    node_id: NodeId
    neighbor_ids: tuple[NodeId, ...]
    not_neighbor_ids: tuple[NodeId, ...]
    union_ids: tuple[NodeId, ...]
    destination: NodeId
    cluster_number: int
    depths: tuple[int, ...]
    bit0_list: tuple[NodeId, ...] = ()

    def depth_to(self, other: NodeId) -> int:
        return self.depths[self.neighbor_ids.index(other)]


@dataclass(frozen=True)
class CompleteInfoTable:
    cluster_number: int
    records: tuple[CompleteInfoRecord, ...]
    bit0_list: tuple[NodeId, ...] = ()

    @property
    def ids(self) -> list[NodeId]:
        return [r.node_id for r in self.records]

    def record(self, node_id: NodeId) -> CompleteInfoRecord:
        for r in self.records:
            if r.node_id == node_id:
                return r
        raise KeyError(node_id)

    def __contains__(self, node_id):
        return any(r.node_id == node_id for r in self.records)

    def neighbors(self, node_id: NodeId) -> list[tuple[NodeId, int]]:
        rec = self.record(node_id)
        return list(zip(rec.neighbor_ids, rec.depths))

    def label_of(self, node_id: NodeId) -> str:
        return self.record(node_id).node_label


def converge_cast(topology: ClusterTopology, gossip: list[GossipEntry]) -> RouterTable:
    """Each node reports its neighbors and depths toward the router, in gossip order."""
    if topology.cluster_head_id is not None:
        current = topology.cluster_head_id
    else:
        current = topology.router_id
    reports = tuple(
        NeighborReport(
            topology.cluster_number,
            g.label,
            g.node_id,
            g.neighbors,
            g.depths,
            current,
            topology.controller_id,
        )
        for g in gossip
    )
    return RouterTable(topology.cluster_number, reports)


def forward_to_controller(router_tables, router_id: NodeId = ROUTER_ID,
                          controller_id: NodeId | None = None) -> ControllerTable:
    """Router relays reports cluster-wise, then ID-wise."""
    seen = set()
    records = []
    for table in sorted(router_tables, key=lambda t: t.cluster_number):
        if table.cluster_number in seen:
            raise DuplicateCluster(f"cluster {table.cluster_number} reported twice")
        seen.add(table.cluster_number)
        for rep in sorted(table.reports, key=lambda r: r.node_id):
            dst = controller_id or rep.final_destination
            records.append(
                ControllerRecord(rep.cluster_number, rep.node_label, rep.node_id,
                                 rep.neighbor_ids, rep.depths, router_id, dst)
            )
    return ControllerTable(tuple(sorted(seen)), tuple(records))


def build_adjacency_matrix(controller_table: ControllerTable, cluster_number: int) -> AdjacencyMatrix:
    rows = sorted(controller_table.for_cluster(cluster_number), key=lambda r: r.node_id)
    ids = tuple(r.node_id for r in rows)
    index = {node_id: i for i, node_id in enumerate(ids)}
    cells = np.zeros((len(ids), len(ids)), dtype=np.int8)
    for r in rows:
        for b in r.neighbor_ids:
            if b not in index:
                raise AsymmetricReports(f"{r.node_id} lists {b}, which sent no report")
            cells[index[r.node_id], index[b]] = 1
    bad = np.argwhere(cells != cells.T)
    if len(bad):
        i, j = bad[0]
        raise AsymmetricReports(f"{ids[i]} lists {ids[j]} but not the reverse")
    if np.any(np.diag(cells)):
        i = int(np.flatnonzero(np.diag(cells))[0])
        raise AsymmetricReports(f"{ids[i]} lists itself as a neighbor")
    return AdjacencyMatrix(cluster_number, ids, tuple(r.node_label for r in rows), cells)


def derive_complete_info(matrix: AdjacencyMatrix, controller_table: ControllerTable,
                         destination: NodeId | None = None) -> CompleteInfoTable:
    """Union of neighbor and not-neighbor IDs per node.

    A node's own ID counts as a not-neighbor, so every union equals the full
    cluster ID set.
    """
    rows = {r.node_id: r for r in controller_table.for_cluster(matrix.cluster_number)}
    everyone = set(matrix.ids)
    records = []
    for i, node_id in enumerate(matrix.ids):
        rep = rows[node_id]
        adjacent = {matrix.ids[j] for j in np.flatnonzero(matrix.cells[i])}
        # keep the reported listing order; the matrix row decides membership
        nbrs = tuple(b for b in rep.neighbor_ids if b in adjacent)
        reported = dict(zip(rep.neighbor_ids, rep.depths))
        depths = tuple(reported[b] for b in nbrs)
        records.append(
            CompleteInfoRecord(
                rep.node_label,
                node_id,
                nbrs,
                tuple(sorted(everyone - adjacent)),
                tuple(sorted(everyone)),
                destination or rep.source_id,
                matrix.cluster_number,
                depths,
            )
        )
    return CompleteInfoTable(matrix.cluster_number, tuple(records))


@dataclass(frozen=True)
class Delivery:
    cluster_number: int
    node_label: str
    node_id: NodeId
    table: CompleteInfoTable


@dataclass(frozen=True)
class BroadcastHop:
    """One message of the broadcast: sender and receiver names plus the addressed ID."""

    cluster_number: int
    sender: str
    receiver: str
    destination: NodeId


@dataclass
class BroadcastResult:
    deliveries: list[Delivery]
    hops: list[BroadcastHop]


def broadcast_complete_info(complete_tables, topologies) -> BroadcastResult:
    """Controller to router, then router to each node of the matching cluster."""
    if isinstance(complete_tables, CompleteInfoTable):
        complete_tables = [complete_tables]
    if isinstance(topologies, ClusterTopology):
        topologies = [topologies]
    by_cluster = {t.cluster_number: t for t in topologies}
    deliveries, hops = [], []
    for table in complete_tables:
        topo = by_cluster.get(table.cluster_number)
        if topo is None or not table.records:
            continue
        hops.append(BroadcastHop(table.cluster_number, "controller", "router", topo.router_id))
        relay = "router"
        if topo.cluster_head_id is not None:
            hops.append(BroadcastHop(table.cluster_number, "router", "head", topo.cluster_head_id))
            relay = "head"
        member_ids = set(topo.ids)
        for rec in table.records:
            if rec.node_id not in member_ids:
                continue
            hops.append(BroadcastHop(table.cluster_number, relay, rec.node_label, rec.node_id))
            deliveries.append(Delivery(table.cluster_number, rec.node_label, rec.node_id, table))
    return BroadcastResult(deliveries, hops)
