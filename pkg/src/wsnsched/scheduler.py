"""Sleep/wake scheduling inside one cluster.

A session moves a data frame from the slot owner (the main sender) to a final
destination hop by hop. Every hop picks the shortest-depth neighbor, runs
rts/cts followed by data/ack/ack-confirmation, and puts the nodes that are
not needed to sleep until the slot finishes.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field, fields

from .control_plane import CompleteInfoTable
from .radio import ClusterRadio, Frame, FrameKind
from .topology import NodeId, link
from .trace import fmt_num


class SchedulingError(Exception):
    pass


class EmptyCluster(SchedulingError):
    pass


class NoCandidate(SchedulingError):
    pass


class CtsTimeout(SchedulingError):
    def __init__(self, outcome):
        super().__init__(f"no cts from {outcome.receiver}")
        self.outcome = outcome


class BothSidesFailed(SchedulingError):
    pass


@dataclass(frozen=True)
class ScheduleConfig:
    """Timing knobs, all in ms. None of these values come from measurements."""

    slot_threshold: float = 20.0
    base_slot: float = 2.0
    rts: float = 0.2
    cts: float = 0.2
    ack: float = 0.2
    ack_conf: float = 0.2
    data_unit: float = 1.0
    payload: int = 1
    cts_guard: float = 0.2
    head_window: float | None = None
    setup_latency: float = 0.0
    charge_setup: bool = False
    rotate: bool = True
    max_n: int = 3

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, (int, float)) and not isinstance(value, bool) and value < 0:
                raise ValueError(f"{f.name} must be >= 0")
        if self.slot_threshold <= 0 or self.base_slot <= 0:
            raise ValueError("slot_threshold and base_slot must be positive")

    @classmethod
    def keys(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    @property
    def data(self) -> float:
        return self.data_unit * self.payload

    @property
    def hop_time(self) -> float:
        return self.rts + self.cts + self.data + self.ack + self.ack_conf

    @property
    def window(self) -> float:
        return self.slot_threshold if self.head_window is None else self.head_window


class LinkState:
    """Which links currently carry frames.

    ``links=None`` treats every pair as physically linked; only explicit
    failures take a link down.
    """

    def __init__(self, links=None, failed=()):
        self.links = None if links is None else {link(a, b) for a, b in links}
        self.failed = {link(a, b) for a, b in failed}

    def is_up(self, a: NodeId, b: NodeId) -> bool:
        pair = link(a, b)
        if self.links is not None and pair not in self.links:
            return False
        return pair not in self.failed

    def fail(self, a, b):
        self.failed.add(link(a, b))

    def heal(self, a, b):
        self.failed.discard(link(a, b))

    def add_link(self, a, b):
        if self.links is not None:
            self.links.add(link(a, b))

    def drop_node(self, node_id):
        if self.links is not None:
            self.links = {l for l in self.links if node_id not in l}
        self.failed = {l for l in self.failed if node_id not in l}


@dataclass(frozen=True)
class PrioritySchedule:
    round: int
    order: tuple[NodeId, ...]
    slot_threshold: float


def build_priority_schedule(cluster_ids, round: int, rng=None, slot_threshold: float = 20.0,
                            rotate: bool = True) -> PrioritySchedule:
    """Round 0 runs lowest ID first; later rounds shuffle with ``rng``."""
    ids = sorted(cluster_ids)
    if not ids:
        raise EmptyCluster("cannot schedule an empty cluster")
    if round > 0 and rotate:
        if rng is None:
            raise ValueError("rotation needs an rng")
        ids = [ids[int(i)] for i in rng.permutation(len(ids))]
    return PrioritySchedule(round, tuple(ids), slot_threshold)


def _bit0(info: CompleteInfoTable, node_id: NodeId) -> set[NodeId]:
    out = set(info.bit0_list)
    if node_id in info:
        out.update(info.record(node_id).bit0_list)
    return out


def select_next_hop(current: NodeId, previous_hop: NodeId | None, info: CompleteInfoTable,
                    link_state: LinkState | None = None, *, unavailable=(),
                    destination: NodeId | None = None) -> tuple[NodeId, bool]:
    """Next relay for a frame held by ``current``.

    Picks the smallest-depth neighbor (lowest ID on ties), or ``destination``
    directly when it is a neighbor. If ``link_state`` marks that link as
    failed, falls back to the largest-depth remaining neighbor.
    """
    excluded = _bit0(info, current) | set(unavailable)
    if previous_hop is not None:
        excluded.add(previous_hop)
    cands = [(nbr, d) for nbr, d in info.neighbors(current) if nbr not in excluded]
    if not cands:
        raise NoCandidate(f"{current} has no usable neighbor")
    direct = [c for c in cands if c[0] == destination]
    primary = direct[0] if direct else min(cands, key=lambda c: (c[1], c[0]))
    if link_state is None or link_state.is_up(current, primary[0]):
        return primary[0], False
    rest = [c for c in cands if c[0] != primary[0] and link_state.is_up(current, c[0])]
    if not rest:
        raise NoCandidate(f"{current} has no healthy neighbor left")
    fallback = max(rest, key=lambda c: (c[1], -c[0].value))
    return fallback[0], True


def hop_distance(info: CompleteInfoTable, src: NodeId, dst: NodeId, excluded=()) -> int | None:
    """Fewest hops from ``src`` to ``dst`` over the table's neighbor lists."""
    if src == dst:
        return 0
    excluded = set(excluded)
    seen = {src}
    queue = deque([(src, 0)])
    while queue:
        node, dist = queue.popleft()
        for nbr, _ in info.neighbors(node):
            if nbr in seen or nbr in excluded or nbr not in info:
                continue
            if nbr == dst:
                return dist + 1
            seen.add(nbr)
            queue.append((nbr, dist + 1))
    return None


@dataclass
class HopOutcome:
    sender: NodeId
    receiver: NodeId
    handshake: str  # ok | cts_timeout | failed_both
    fallback: bool = False
    start: float = 0.0
    end: float = 0.0


@dataclass
class Session:
    main_sender: NodeId
    final_destination: NodeId
    info: CompleteInfoTable
    config: ScheduleConfig
    start_time: float
    slot_end: float
    path: list[NodeId] = field(default_factory=list)
    hops: list[HopOutcome] = field(default_factory=list)
    sleep_intervals: list[tuple[NodeId, float, float]] = field(default_factory=list)

    @property
    def slept(self) -> set[NodeId]:
        return {n for n, _, _ in self.sleep_intervals}

    def previous_of(self, node_id: NodeId) -> NodeId | None:
        if node_id in self.path:
            i = self.path.index(node_id)
            return self.path[i - 1] if i > 0 else None
        return None

    def sleep_duration(self, sender: NodeId, now: float) -> float:
        """base_slot times the sender's remaining hops, cut at the slot end."""
        remaining = hop_distance(self.info, sender, self.final_destination,
                                 _bit0(self.info, sender)) or 1
        return max(0.0, min(self.config.base_slot * max(1, remaining), round(self.slot_end - now, 9)))


@dataclass
class SessionResult:
    main_sender: NodeId
    final_destination: NodeId
    path: list[NodeId]
    hop_outcomes: list[HopOutcome]
    sleep_intervals: list[tuple[NodeId, float, float]]
    delivered: bool
    reason: str
    start_time: float
    finish_time: float
    end_time: float

    @property
    def sleepers(self) -> set[NodeId]:
        return {n for n, _, _ in self.sleep_intervals}


def compute_sleep_set(hop: tuple[NodeId, NodeId], session: Session, now: float | None = None,
                      sleeping=()) -> list[tuple[NodeId, float]]:
    """Nodes to put to sleep once ``hop`` has cleared rts/cts.

    The sender's other neighbors always sleep. On the final hop the
    destination's other neighbors sleep as well.
    """
    sender, receiver = hop
    info = session.info
    now = session.start_time if now is None else now
    final = session.final_destination
    keep = {sender, receiver, final} | set(session.path) | set(sleeping) | _bit0(info, sender)
    prev = session.previous_of(sender)
    if prev is not None:
        keep.add(prev)
    duration = session.sleep_duration(sender, now)
    if duration <= 0:
        return []
    chosen = [n for n, _ in info.neighbors(sender) if n not in keep]
    if receiver == final:
        chosen += [n for n, _ in info.neighbors(receiver) if n not in keep and n not in chosen]
    return [(n, duration) for n in chosen]


def perform_hop(session: Session, sender: NodeId, receiver: NodeId, link_state: LinkState,
                radio: ClusterRadio, fallback: bool = False) -> HopOutcome:
    cfg = session.config
    main, final = session.main_sender, session.final_destination
    start = radio.now
    up = link_state.is_up(sender, receiver)
    radio.transmit(Frame(FrameKind.RTS, main, sender, receiver, final), cfg.rts, delivered=up)
    if not up:
        radio.advance(cfg.cts + cfg.cts_guard)
        radio.emit(sender, "cts_timeout", f"from={radio.name(receiver)}")
        outcome = HopOutcome(sender, receiver, "cts_timeout", fallback, start, radio.now)
        session.hops.append(outcome)
        raise CtsTimeout(outcome)
    radio.transmit(Frame(FrameKind.CTS, main, receiver, sender, final), cfg.cts)

    for node, duration in compute_sleep_set((sender, receiver), session, radio.now, radio.sleeping()):
        radio.sleep(node, duration)
        session.sleep_intervals.append((node, radio.now, duration))

    radio.transmit(Frame(FrameKind.DATA, main, sender, receiver, final, cfg.payload), cfg.data)
    radio.transmit(Frame(FrameKind.ACK, main, receiver, sender, final), cfg.ack)
    radio.transmit(Frame(FrameKind.ACK_CONF, main, sender, receiver, final), cfg.ack_conf)
    if receiver != final:
        duration = session.sleep_duration(sender, radio.now)
        if duration > 0:
            radio.sleep(sender, duration)
            session.sleep_intervals.append((sender, radio.now, duration))
    outcome = HopOutcome(sender, receiver, "ok", fallback, start, radio.now)
    session.hops.append(outcome)
    return outcome


def run_session(main_sender: NodeId, final_destination: NodeId, info: CompleteInfoTable,
                link_state: LinkState, radio: ClusterRadio, config: ScheduleConfig = ScheduleConfig(),
                slot_end: float | None = None) -> SessionResult:
    """Deliver one frame from ``main_sender`` to ``final_destination`` inside one slot."""
    if main_sender == final_destination:
        raise ValueError("main sender and final destination must differ")
    start = radio.now
    slot_end = round(start + config.slot_threshold, 9) if slot_end is None else slot_end
    session = Session(main_sender, final_destination, info, config, start, slot_end, [main_sender])
    radio.emit(main_sender, "session_start", f"{radio.name(main_sender)}->{radio.name(final_destination)}")

    reason = "delivered"
    current = main_sender
    while current != final_destination:
        if radio.now + config.hop_time > slot_end + 1e-9:
            reason = "slot_expired"
            break
        previous = session.previous_of(current)
        unavailable = set(session.path) | session.slept | radio.sleeping()
        try:
            receiver, _ = select_next_hop(current, previous, info, None, unavailable=unavailable,
                                          destination=final_destination)
        except NoCandidate:
            reason = "no_candidate"
            break
        try:
            outcome = perform_hop(session, current, receiver, link_state, radio)
        except CtsTimeout:
            known = LinkState(failed=[(current, receiver)])
            try:
                fallback, _ = select_next_hop(current, previous, info, known, unavailable=unavailable,
                                              destination=final_destination)
                outcome = perform_hop(session, current, fallback, link_state, radio, fallback=True)
            except (NoCandidate, CtsTimeout):
                session.hops[-1].handshake = "failed_both"
                reason = "both_sides_failed"
                break
        current = outcome.receiver
        session.path.append(current)

    delivered = current == final_destination
    path_names = "-".join(radio.name(n) for n in session.path)
    status = "delivered" if delivered else f"undelivered;reason={reason}"
    radio.emit(main_sender, "session_end", f"{status};path={path_names}")
    return SessionResult(main_sender, final_destination, list(session.path), session.hops,
                         session.sleep_intervals, delivered, reason, start, radio.now, slot_end)


def sleep_summary(result: SessionResult, radio: ClusterRadio) -> str:
    return ";".join(f"{radio.name(n)}={fmt_num(d)}ms" for n, _, d in result.sleep_intervals)
