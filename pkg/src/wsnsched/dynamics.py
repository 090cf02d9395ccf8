"""Dynamic membership: the cluster head's table, bit-0 leaves and joins."""

from __future__ import annotations

from dataclasses import dataclass, replace

from .control_plane import CompleteInfoRecord, CompleteInfoTable, NeighborReport
from .topology import CLUSTER_HEAD_ID, ClusterTopology, Node, NodeId, depth


class MembershipError(Exception):
    pass


class NotDynamicMode(MembershipError):
    pass


class OutsideWindow(MembershipError):
    def __init__(self, next_window: float | None):
        super().__init__(f"outside the cluster head window; next window at {next_window}")
        self.next_window = next_window


class UnknownNode(MembershipError):
    pass


class UnknownReporter(MembershipError):
    pass


class NoOverlap(MembershipError):
    pass


@dataclass(frozen=True)
class ClusterHeadTable(CompleteInfoTable):
    head_id: NodeId = CLUSTER_HEAD_ID

    @classmethod
    def from_complete(cls, table: CompleteInfoTable, head_id: NodeId = CLUSTER_HEAD_ID) -> "ClusterHeadTable":
        return cls(table.cluster_number, table.records, table.bit0_list, head_id)


@dataclass(frozen=True)
class Bit0Message:
    node_label: str
    node_id: NodeId
    bit: int = 0
    destination_id: NodeId = CLUSTER_HEAD_ID


@dataclass(frozen=True)
class RoundPlan:
    """Slot layout of one round; ``window`` is the head's (start, end) or None."""

    round: int
    start: float
    slots: tuple[tuple[NodeId, float, float], ...]
    window: tuple[float, float] | None = None

    @property
    def end(self) -> float:
        if self.window is not None:
            return self.window[1]
        return self.slots[-1][2] if self.slots else self.start

    def slot_at(self, t: float):
        for owner, s, e in self.slots:
            if s <= t < e:
                return owner, s, e
        return None


@dataclass(frozen=True)
class MembershipUpdate:
    table: ClusterHeadTable
    broadcast_to: tuple[NodeId, ...]
    relayed_by: dict


def request_leave(node_label: str, node_id: NodeId, time: float, plan: RoundPlan,
                  dynamic: bool = True, head_id: NodeId = CLUSTER_HEAD_ID) -> Bit0Message:
    """Accept a departure only inside the head's listening window."""
    if not dynamic:
        raise NotDynamicMode("leave requests need a cluster head")
    if plan.window is None:
        raise OutsideWindow(None)
    start, end = plan.window
    if start <= time < end:
        return Bit0Message(node_label, node_id, 0, head_id)
    raise OutsideWindow(start if time < start else None)


def _rebuild(rec: CompleteInfoRecord, members: list[NodeId], neighbors, depths, head, bit0):
    everyone = set(members)
    return replace(
        rec,
        neighbor_ids=tuple(neighbors),
        depths=tuple(depths),
        not_neighbor_ids=tuple(sorted(everyone - set(neighbors))),
        union_ids=tuple(sorted(everyone)),
        destination=head,
        bit0_list=tuple(bit0),
    )


def apply_leave(table: ClusterHeadTable, msg: Bit0Message) -> MembershipUpdate:
    """Scrub the mover from every record and list it as a bit-0 node."""
    if msg.node_id not in table:
        raise UnknownNode(f"{msg.node_id} is not a member")
    gone = msg.node_id
    members = [r.node_id for r in table.records if r.node_id != gone]
    bit0 = list(table.bit0_list) + [gone]
    records = []
    for rec in table.records:
        if rec.node_id == gone:
            continue
        kept = [(n, d) for n, d in zip(rec.neighbor_ids, rec.depths) if n != gone]
        records.append(_rebuild(rec, members, [n for n, _ in kept], [d for _, d in kept],
                                table.head_id, bit0))
    new = ClusterHeadTable(table.cluster_number, tuple(records), tuple(bit0), table.head_id)
    return MembershipUpdate(new, tuple(members), {})


def announce_join(new_node: Node, topology: ClusterTopology, active=None) -> list[NodeId]:
    """Members whose communication range overlaps the newcomer's."""
    if new_node.position is None:
        raise ValueError("the newcomer needs a position to announce itself")
    out = []
    for n in sorted(topology.nodes, key=lambda n: n.node_id):
        if active is not None and n.node_id not in active:
            continue
        if n.position is not None and n.position.overlaps(new_node.position):
            out.append(n.node_id)
    if not out:
        raise NoOverlap(f"{new_node.label} overlaps no active member")
    return out


def join_reports(table: ClusterHeadTable, newcomer_id: NodeId, overlap) -> list[NeighborReport]:
    """Updated neighbor reports the overlapped members send to the head."""
    reports = []
    for member in overlap:
        if member not in table:
            raise UnknownReporter(f"{member} is not a member")
        rec = table.record(member)
        nbrs = rec.neighbor_ids + (newcomer_id,)
        reports.append(NeighborReport(table.cluster_number, rec.node_label, member, nbrs,
                                      rec.depths + (depth(member, newcomer_id),),
                                      table.head_id, table.head_id))
    return reports


def apply_join(table: ClusterHeadTable, newcomer_label: str, newcomer_id: NodeId,
               reports: list[NeighborReport]) -> MembershipUpdate:
    """Fold the newcomer into the head's table from its neighbors' reports."""
    by_id = {r.node_id: r for r in reports}
    for rep in reports:
        if rep.node_id not in table:
            raise UnknownReporter(f"{rep.node_id} is not a member")
        if newcomer_id not in rep.neighbor_ids:
            raise ValueError(f"report from {rep.node_id} does not list {newcomer_id}")
    if newcomer_id in table:
        raise MembershipError(f"{newcomer_id} is already a member")

    members = sorted(table.ids + [newcomer_id])
    bit0 = [b for b in table.bit0_list if b != newcomer_id]
    records = []
    for rec in table.records:
        if rec.node_id in by_id:
            rep = by_id[rec.node_id]
            nbrs, depths = rep.neighbor_ids, rep.depths
        else:
            nbrs, depths = rec.neighbor_ids, rec.depths
        records.append(_rebuild(rec, members, nbrs, depths, table.head_id, bit0))
    overlap = sorted(by_id)
    base = CompleteInfoRecord(newcomer_label, newcomer_id, (), (), (), table.head_id,
                              table.cluster_number, ())
    records.append(_rebuild(base, members, overlap, [depth(newcomer_id, o) for o in overlap],
                            table.head_id, bit0))
    records.sort(key=lambda r: r.node_id)
    new = ClusterHeadTable(table.cluster_number, tuple(records), tuple(bit0), table.head_id)
    relays = {newcomer_id: overlap[0]} if overlap else {}
    return MembershipUpdate(new, tuple(members), relays)
