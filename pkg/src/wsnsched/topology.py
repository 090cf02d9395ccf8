"""Cluster topologies, binary node IDs, neighbor discovery and depth."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence


class TopologyError(Exception):
    pass


class TooManyNodes(TopologyError):
    pass


class ReservedCollision(TopologyError):
    pass


class DuplicateId(TopologyError):
    pass


@dataclass(frozen=True, order=True)
class NodeId:
    """Binary node identity. ``width`` is the number of rendered digits."""

    value: int
    width: int = 4

    def __post_init__(self):
        if not 0 <= self.value <= 31:
            raise ValueError(f"node id {self.value} outside [0, 31]")
        if self.value >= 2 ** self.width:
            raise ValueError(f"node id {self.value} does not fit in {self.width} bits")

    @classmethod
    def parse(cls, text: str) -> "NodeId":
        text = text.strip()
        if not text or any(ch not in "01" for ch in text):
            raise ValueError(f"not a binary node id: {text!r}")
        return cls(int(text, 2), len(text))

    def __str__(self):
        return format(self.value, f"0{self.width}b")

    def __repr__(self):
        return f"NodeId('{self}')"


ROUTER_ID = NodeId.parse("1000")
CONTROLLER_ID = NodeId.parse("1001")
CLUSTER_HEAD_ID = NodeId.parse("10000")


def nid(text: str) -> NodeId:
    """Shorthand for :meth:`NodeId.parse`."""
    return NodeId.parse(text)


@dataclass(frozen=True)
class NodePosition:
    x: float
    y: float
    range: float

    def overlaps(self, other: "NodePosition") -> bool:
        return math.dist((self.x, self.y), (other.x, other.y)) <= self.range + other.range


@dataclass(frozen=True)
class Node:
    label: str
    node_id: NodeId
    position: NodePosition | None = None


def link(a: NodeId, b: NodeId) -> tuple[NodeId, NodeId]:
    """Canonical (sorted) form of an undirected link."""
    return (a, b) if a <= b else (b, a)


@dataclass(frozen=True)
class ClusterTopology:
    """One cluster: its nodes, undirected links and the reserved identities.

    ``neighbor_order`` optionally fixes the order in which a node lists its
    neighbors; nodes absent from it list neighbors by ascending ID.
    """

    cluster_number: int
    nodes: tuple[Node, ...]
    links: frozenset = frozenset()
    router_id: NodeId = ROUTER_ID
    controller_id: NodeId = CONTROLLER_ID
    cluster_head_id: NodeId | None = None
    neighbor_order: Mapping[NodeId, tuple[NodeId, ...]] = field(default_factory=dict)
    max_n: int = 3

    @classmethod
    def build(cls, cluster_number, nodes, links=None, **kwargs) -> "ClusterTopology":
        """Create a topology; ``links`` given as label or ID pairs.

        When ``links`` is None the links are derived from range overlap.
        """
        nodes = tuple(nodes)
        by_label = {n.label: n.node_id for n in nodes}
        if links is None:
            derived = geometric_links(nodes)
        else:
            derived = set()
            for a, b in links:
                a = by_label.get(a, a) if isinstance(a, str) else a
                b = by_label.get(b, b) if isinstance(b, str) else b
                derived.add(link(a, b))
        order = kwargs.pop("neighbor_order", None) or {}
        order = {
            (by_label[k] if isinstance(k, str) else k): tuple(
                by_label[v] if isinstance(v, str) else v for v in vals
            )
            for k, vals in order.items()
        }
        return cls(cluster_number, nodes, frozenset(derived), neighbor_order=order, **kwargs)

    @property
    def ids(self) -> list[NodeId]:
        return sorted(n.node_id for n in self.nodes)

    def label_of(self, node_id: NodeId) -> str:
        for n in self.nodes:
            if n.node_id == node_id:
                return n.label
        raise KeyError(node_id)

    def id_of(self, label: str) -> NodeId:
        for n in self.nodes:
            if n.label == label:
                return n.node_id
        raise KeyError(label)

    def has_positions(self) -> bool:
        return bool(self.nodes) and all(n.position is not None for n in self.nodes)

    def neighbors(self, node_id: NodeId) -> list[NodeId]:
        """Neighbors of ``node_id`` in listing order."""
        adjacent = {b if a == node_id else a for a, b in self.links if node_id in (a, b)}
        if node_id in self.neighbor_order and set(self.neighbor_order[node_id]) == adjacent:
            return list(self.neighbor_order[node_id])
        return sorted(adjacent)

    def with_node(self, node: Node, neighbors: Iterable[NodeId]) -> "ClusterTopology":
        links = set(self.links) | {link(node.node_id, b) for b in neighbors}
        order = dict(self.neighbor_order)
        for b in neighbors:
            if b in order:
                order[b] = order[b] + (node.node_id,)
        return replace(self, nodes=self.nodes + (node,), links=frozenset(links), neighbor_order=order)

    def without_node(self, node_id: NodeId) -> "ClusterTopology":
        order = {
            k: tuple(v for v in vals if v != node_id)
            for k, vals in self.neighbor_order.items()
            if k != node_id
        }
        return replace(
            self,
            nodes=tuple(n for n in self.nodes if n.node_id != node_id),
            links=frozenset(l for l in self.links if node_id not in l),
            neighbor_order=order,
        )


def geometric_links(nodes: Sequence[Node]) -> set[tuple[NodeId, NodeId]]:
    out = set()
    for i, a in enumerate(nodes):
        for b in nodes[i + 1:]:
            if a.position is None or b.position is None:
                continue
            if a.position.overlaps(b.position):
                out.add(link(a.node_id, b.node_id))
    return out


def depth(a: NodeId, b: NodeId) -> int:
    """Depth between two nodes: largest ID minus smallest ID."""
    return abs(a.value - b.value)


@dataclass(frozen=True)
class IdAssignment:
    ids: dict[str, NodeId]
    current_destination: NodeId
    final_destination: NodeId

    def rows(self):
        """(label, id, current destination, final destination), ascending by ID."""
        for label, node_id in sorted(self.ids.items(), key=lambda kv: kv[1]):
            yield label, node_id, self.current_destination, self.final_destination


def assign_ids(
    labels: Sequence[str],
    router_id: NodeId = ROUTER_ID,
    controller_id: NodeId = CONTROLLER_ID,
    cluster_head_id: NodeId | None = None,
    explicit: Mapping[str, NodeId] | None = None,
    rng=None,
    taken: Iterable[NodeId] = (),
) -> IdAssignment:
    """Give every label a unique 4-bit ID that avoids the reserved ones.

    Labels missing from ``explicit`` draw from ``rng`` (a numpy Generator).
    In dynamic mode (``cluster_head_id`` set) the cluster head replaces the
    router as the current destination.
    """
    explicit = dict(explicit or {})
    reserved = {router_id, controller_id, cluster_head_id or CLUSTER_HEAD_ID}
    taken = set(taken)
    pool = [NodeId(v) for v in range(16) if NodeId(v) not in reserved]
    if len(labels) > len(pool):
        raise TooManyNodes(f"{len(labels)} labels but only {len(pool)} assignable IDs")

    ids: dict[str, NodeId] = {}
    for label in labels:
        if label not in explicit:
            continue
        node_id = explicit[label]
        if node_id in reserved:
            raise ReservedCollision(f"{label} uses reserved id {node_id}")
        if node_id in ids.values() or node_id in taken:
            raise DuplicateId(f"{label} reuses id {node_id}")
        ids[label] = node_id

    free = [i for i in pool if i not in taken and i not in ids.values()]
    missing = [label for label in labels if label not in ids]
    if len(missing) > len(free):
        raise TooManyNodes(f"{len(missing)} labels left but only {len(free)} free IDs")
    if missing:
        if rng is None:
            raise ValueError("an rng is required to auto-assign ids")
        picks = rng.choice(len(free), size=len(missing), replace=False)
        for label, idx in zip(missing, picks):
            ids[label] = free[int(idx)]

    current = cluster_head_id if cluster_head_id is not None else router_id
    return IdAssignment({label: ids[label] for label in labels}, current, controller_id)


@dataclass(frozen=True)
class GossipEntry:
    label: str
    node_id: NodeId
    neighbors: tuple[NodeId, ...]
    depths: tuple[int, ...]


def discover_neighbors(topology: ClusterTopology) -> list[GossipEntry]:
    """Local gossip, smallest ID first."""
    out = []
    for node in sorted(topology.nodes, key=lambda n: n.node_id):
        nbrs = tuple(topology.neighbors(node.node_id))
        out.append(GossipEntry(node.label, node.node_id, nbrs, tuple(depth(node.node_id, b) for b in nbrs)))
    return out


@dataclass(frozen=True)
class Violation:
    kind: str
    detail: str


def validate_topology(topology: ClusterTopology) -> list[Violation]:
    """Every invariant violation found; an empty list means the topology is valid."""
    problems = []
    reserved = {topology.router_id: "router", topology.controller_id: "controller"}
    if topology.cluster_head_id is not None:
        reserved[topology.cluster_head_id] = "cluster head"

    seen_ids: dict[NodeId, str] = {}
    seen_labels = set()
    for n in topology.nodes:
        if n.label in seen_labels:
            problems.append(Violation("duplicate_label", n.label))
        seen_labels.add(n.label)
        if n.node_id in reserved:
            problems.append(Violation("reserved_id", f"{n.label} uses {reserved[n.node_id]} id {n.node_id}"))
        if n.node_id.width != 4:
            problems.append(Violation("id_width", f"{n.label} id {n.node_id} is not 4 bits"))
        if n.node_id in seen_ids:
            problems.append(Violation("duplicate_id", f"{n.label} and {seen_ids[n.node_id]} share {n.node_id}"))
        seen_ids.setdefault(n.node_id, n.label)
        if n.position is not None and not n.position.range > 0:
            problems.append(Violation("range", f"{n.label} has non-positive range {n.position.range}"))

    limit = 2 ** topology.max_n
    if len(topology.nodes) > limit:
        problems.append(Violation("too_many_nodes", f"{len(topology.nodes)} nodes exceeds 2^{topology.max_n}"))

    for a, b in sorted(topology.links):
        if a == b:
            problems.append(Violation("self_link", f"{a}-{b}"))
        for end in (a, b):
            if end not in seen_ids:
                problems.append(Violation("dangling_link", f"{a}-{b} references unknown {end}"))

    if topology.has_positions() and topology.links:
        geo = geometric_links(topology.nodes)
        declared = {l for l in topology.links if l[0] != l[1]}
        for l in sorted(declared - geo):
            problems.append(Violation("range_mismatch", f"{l[0]}-{l[1]} declared but ranges do not overlap"))
        for l in sorted(geo - declared):
            problems.append(Violation("range_mismatch", f"{l[0]}-{l[1]} ranges overlap but link not declared"))

    for owner, order in topology.neighbor_order.items():
        adjacent = {b if a == owner else a for a, b in topology.links if owner in (a, b)}
        if len(set(order)) != len(order) or set(order) != adjacent:
            problems.append(Violation("neighbor_order", f"order for {owner} is not a permutation of its neighbors"))
    return problems
