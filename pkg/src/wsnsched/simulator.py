"""Deterministic event loop tying setup, sessions and membership changes together.

Time is kept per cluster. After the setup phase every cluster runs rounds of
fixed slots, one per member in priority order. In dynamic mode each round
ends with the cluster head's listening window, where queued leave and join
requests are served. A cluster keeps running rounds while it has queued work
or requests are still to arrive.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np

from .control_plane import (
    AdjacencyMatrix,
    CompleteInfoTable,
    ControllerTable,
    RouterTable,
    broadcast_complete_info,
    build_adjacency_matrix,
    converge_cast,
    derive_complete_info,
    forward_to_controller,
)
from .dynamics import (
    Bit0Message,
    ClusterHeadTable,
    MembershipError,
    OutsideWindow,
    RoundPlan,
    apply_join,
    apply_leave,
    join_reports,
    request_leave,
)
from .energy import (
    BUCKETS,
    EnergyError,
    EnergyLedger,
    join_session_power,
    leave_session_power,
    static_session_power,
)
from .radio import ClusterRadio, FrameKind
from .scenario import EventSpec, Scenario, SessionSpec
from .scheduler import LinkState, build_priority_schedule, run_session
from .topology import ClusterTopology, Node, NodeId, discover_neighbors
from .trace import Trace, fmt_ms, fmt_num

# same-time ordering: round boundaries, then arrivals, then slots, then head windows
_BOUNDARY, _ARRIVAL, _SLOT, _WINDOW = range(4)
MAX_ROUNDS = 100_000


@dataclass
class SessionSummary:
    cluster: int
    src: str
    dst: str
    requested_at: float
    start: float | None
    path: list[str]
    delivered: bool
    reason: str
    sleepers: list[tuple[str, float, float]]
    hops: int
    ledger_control_mj: float
    equation_mj: float | None


@dataclass
class MembershipSummary:
    time: float
    cluster: int
    kind: str
    label: str
    accepted: bool
    reason: str = ""
    ledger_control_mj: float = 0.0
    equation_mj: float | None = None


@dataclass
class TableSnapshot:
    time: float
    cluster: int
    title: str
    table: ClusterHeadTable
    message: Bit0Message | None = None
    reports: tuple = ()


@dataclass
class SetupTables:
    router_tables: list[RouterTable]
    controller_table: ControllerTable
    matrices: list[AdjacencyMatrix]
    complete: list[CompleteInfoTable]
    topologies: list[ClusterTopology]
    head_tables: list[ClusterHeadTable] = field(default_factory=list)


@dataclass
class Summary:
    energy: dict[tuple[int, str], dict[str, float]]
    sessions: list[SessionSummary]
    membership: list[MembershipSummary]
    rounds: dict[int, int]
    slot0: dict[int, list[str]]

    @property
    def delivered(self) -> int:
        return sum(s.delivered for s in self.sessions)

    def total(self, cluster: int, label: str) -> float:
        return sum(self.energy[(cluster, label)].values())


@dataclass
class RunResult:
    trace: Trace
    summary: Summary
    setup: SetupTables
    snapshots: list[TableSnapshot]

    def __iter__(self):
        # allows ``trace, summary = run(...)``
        return iter((self.trace, self.summary))


@dataclass
class _Cluster:
    number: int
    topology: ClusterTopology
    radio: ClusterRadio
    info: CompleteInfoTable
    links: LinkState
    round: int = -1
    plan: RoundPlan | None = None
    pending: list = field(default_factory=list)
    deferred: list = field(default_factory=list)
    running: bool = False
    slot0: list = field(default_factory=list)


def _control_total(ledger: EnergyLedger, cluster: int) -> float:
    return sum(ledger.buckets(n)["control"] for n in ledger.nodes() if n[0] == cluster)


class Simulator:
    def __init__(self, scenario: Scenario, seed: int | None = None):
        self.scenario = scenario
        self.cfg = scenario.schedule
        self.rng = np.random.default_rng(scenario.seed if seed is None else seed)
        self.trace = Trace()
        self.ledger = EnergyLedger(scenario.energy)
        self.heap: list = []
        self._seq = 0
        self.clusters: dict[int, _Cluster] = {}
        self.sessions: list[SessionSummary] = []
        self.membership: list[MembershipSummary] = []
        self.snapshots: list[TableSnapshot] = []
        self.setup: SetupTables | None = None

    # -- plumbing ------------------------------------------------------------
    def _push(self, t, prio, fn, *args):
        heapq.heappush(self.heap, (round(t, 9), prio, self._seq, fn, args))
        self._seq += 1

    def _arrivals_left(self) -> bool:
        return any(item[1] == _ARRIVAL for item in self.heap)

    def _record(self, t, cluster, node, kind, detail="", energy=0.0):
        self.trace.add(t, cluster, node, kind, detail, energy)

    # -- setup -----------------------------------------------------------------
    def _setup(self) -> float:
        sc, cfg = self.scenario, self.cfg
        topologies = sc.topologies(self.rng)
        t = 0.0
        lat = cfg.setup_latency

        def charge(cluster, label, state):
            if not cfg.charge_setup:
                return 0.0
            return self.ledger.charge((cluster, label), state, cfg.data)

        router_tables = []
        for topo in topologies:
            for n in topo.nodes:
                self.ledger.register((topo.cluster_number, n.label))
            relay = "head" if topo.cluster_head_id is not None else "router"
            table = converge_cast(topo, discover_neighbors(topo))
            router_tables.append(table)
            for rep in table.reports:
                nbrs = ";".join(str(b) for b in rep.neighbor_ids) or "-"
                self._record(t, topo.cluster_number, rep.node_label, "report",
                             f"{relay};id={rep.node_id};nbrs={nbrs}",
                             charge(topo.cluster_number, rep.node_label, "transmit"))
                t = round(t + lat, 9)
            if relay == "head":
                self._record(t, topo.cluster_number, "head", "report", f"router;reports={len(table.reports)}")
                t = round(t + lat, 9)

        ct = forward_to_controller(router_tables, sc.router_id, sc.controller_id)
        for rec in ct.records:
            self._record(t, rec.cluster_number, "router", "forward", f"controller;id={rec.node_id}")
            t = round(t + lat, 9)

        matrices, complete = [], []
        for topo in topologies:
            m = build_adjacency_matrix(ct, topo.cluster_number)
            info = derive_complete_info(m, ct)
            matrices.append(m)
            complete.append(info)
            self._record(t, topo.cluster_number, "controller", "table_update",
                         f"adjacency;nodes={len(m.ids)};links={int(m.cells.sum()) // 2}")
            self._record(t, topo.cluster_number, "controller", "table_update",
                         f"complete_info;records={len(info.records)}")

        result = broadcast_complete_info(complete, topologies)
        for hop in result.hops:
            energy = 0.0
            if hop.receiver not in ("router", "head"):
                energy = charge(hop.cluster_number, hop.receiver, "receive")
            self._record(t, hop.cluster_number, hop.receiver, "deliver",
                         f"from={hop.sender};dst={hop.destination}", energy)
            t = round(t + lat, 9)

        self.setup = SetupTables(router_tables, ct, matrices, complete, topologies)
        for topo, info in zip(topologies, complete):
            labels = {n.node_id: n.label for n in topo.nodes}
            if sc.dynamic:
                info = ClusterHeadTable.from_complete(info, sc.cluster_head_id)
                self.setup.head_tables.append(info)
                labels[sc.cluster_head_id] = "head"
            radio = ClusterRadio(topo.cluster_number, labels, self.ledger, self.trace, t)
            self.clusters[topo.cluster_number] = _Cluster(
                topo.cluster_number, topo, radio, info, LinkState(topo.links))
        return t

    # -- rounds ------------------------------------------------------------------
    def _start_round(self, cl: _Cluster, t: float):
        cl.round += 1
        if cl.round > MAX_ROUNDS:
            raise RuntimeError(f"cluster {cl.number} exceeded {MAX_ROUNDS} rounds")
        cl.running = True
        members = cl.topology.ids
        cfg = self.cfg
        slots = []
        if members:
            sched = build_priority_schedule(members, cl.round, self.rng, cfg.slot_threshold, cfg.rotate)
            s = t
            for owner in sched.order:
                e = round(s + cfg.slot_threshold, 9)
                slots.append((owner, s, e))
                s = e
            cl.slot0.append(cl.radio.name(sched.order[0]))
        end_slots = slots[-1][2] if slots else t
        window = (end_slots, round(end_slots + cfg.window, 9)) if self.scenario.dynamic else None
        cl.plan = RoundPlan(cl.round, t, tuple(slots), window)
        order = "-".join(cl.radio.name(o) for o, _, _ in slots) or "-"
        node = "head" if self.scenario.dynamic else "router"
        self._record(t, cl.number, node, "round_start", f"round={cl.round};order={order}")
        for owner, s, e in slots:
            self._push(s, _SLOT, self._slot, cl, owner, s, e)
        if window is not None:
            self._push(window[0], _WINDOW, self._window, cl)
        self._push(cl.plan.end, _BOUNDARY, self._boundary, cl)

    def _boundary(self, cl: _Cluster):
        t = cl.plan.end
        cl.radio.set_time(max(cl.radio.now, t))
        cl.radio.wake_due(t)
        if cl.pending or cl.deferred or self._arrivals_left():
            self._start_round(cl, t)
        else:
            cl.running = False
            cl.radio.flush(t)

    def _slot(self, cl: _Cluster, owner: NodeId, s: float, e: float):
        radio = cl.radio
        radio.set_time(max(radio.now, s))
        radio.wake_due(s)
        label = radio.name(owner)
        if owner not in radio.states:
            return
        for i, (req, spec) in enumerate(cl.pending):
            if spec.src == label:
                del cl.pending[i]
                self._run_session(cl, req, spec, owner, e)
                break
        radio.wake_due(e)

    def _run_session(self, cl, requested_at, spec: SessionSpec, owner, slot_end):
        radio = cl.radio
        dst = cl.topology.id_of(spec.dst)
        before = _control_total(self.ledger, cl.number)
        res = run_session(owner, dst, cl.info, cl.links, radio, self.cfg, slot_end=slot_end)
        spent = _control_total(self.ledger, cl.number) - before
        hops = sum(1 for h in res.hop_outcomes if h.handshake == "ok")
        try:
            # k counts the nodes on the realized path
            eq = static_session_power(len(res.path), self.ledger.model, len(cl.topology.nodes))
        except EnergyError:
            eq = None
        self.sessions.append(SessionSummary(
            cl.number, spec.src, spec.dst, requested_at, res.start_time,
            [radio.name(n) for n in res.path], res.delivered, res.reason,
            [(radio.name(n), s, d) for n, s, d in res.sleep_intervals], hops, spent, eq))

    def _window(self, cl: _Cluster):
        radio = cl.radio
        start, _ = cl.plan.window
        radio.set_time(max(radio.now, start))
        radio.wake_due(radio.now)
        queued, cl.deferred = cl.deferred, []
        for requested_at, ev in queued:
            if ev.kind == "leave":
                self._leave(cl, ev)
            else:
                self._join(cl, ev)

    # -- arrivals ---------------------------------------------------------------
    def _cluster_of(self, label: str) -> _Cluster | None:
        for number in sorted(self.clusters):
            cl = self.clusters[number]
            if any(n.label == label for n in cl.topology.nodes):
                return cl
        return None

    def _session_arrival(self, spec: SessionSpec):
        t = spec.time
        src, dst = self._cluster_of(spec.src), self._cluster_of(spec.dst)
        if src is None or dst is None or src is not dst:
            reason = "not_members" if src is None or dst is None else "different_clusters"
            number = src.number if src is not None else 0
            self._record(t, number, spec.src, "session_end",
                         f"undelivered;reason={reason};path={spec.src}")
            self.sessions.append(SessionSummary(number, spec.src, spec.dst, t, None, [], False,
                                                reason, [], 0, 0.0, None))
            return
        src.pending.append((t, spec))
        if not src.running:
            self._start_round(src, max(src.radio.now, t))

    def _event_arrival(self, ev: EventSpec):
        t = ev.time
        if ev.kind in ("link_fail", "link_heal"):
            a, b = ev.args
            cl = self._cluster_of(a)
            if cl is None or self._cluster_of(b) is not cl:
                self._record(t, 0, a, ev.kind, f"ignored;{a}-{b}")
                return
            ia, ib = cl.topology.id_of(a), cl.topology.id_of(b)
            (cl.links.fail if ev.kind == "link_fail" else cl.links.heal)(ia, ib)
            self._record(t, cl.number, a, ev.kind, f"{a}-{b}")
            return
        cl = self._target_cluster(ev)
        if cl is None:
            label = ev.args[0]
            self._record(t, 0, label, f"{ev.kind}_rejected", "reason=unknown_cluster")
            self.membership.append(MembershipSummary(t, 0, ev.kind, label, False, "unknown_cluster"))
            return
        cl.deferred.append((t, ev))
        if not cl.running:
            self._start_round(cl, max(cl.radio.now, t))
        elif cl.plan.window and cl.plan.window[0] <= t < cl.plan.window[1]:
            # the head is listening right now
            cl.radio.set_time(max(cl.radio.now, t))
            self._window(cl)

    def _target_cluster(self, ev: EventSpec):
        if ev.kind == "leave":
            return self._cluster_of(ev.args[0])
        for label in ev.args[3:]:
            cl = self._cluster_of(label)
            if cl is not None:
                return cl
        return None

    # -- membership -------------------------------------------------------------
    def _reject(self, cl, ev, reason):
        label = ev.args[0]
        cl.radio.emit("head", f"{ev.kind}_rejected", f"{label};reason={reason}")
        self.membership.append(MembershipSummary(cl.radio.now, cl.number, ev.kind, label, False, reason))

    def _drop_sessions(self, cl, label):
        keep = []
        for req, spec in cl.pending:
            if label in (spec.src, spec.dst):
                cl.radio.emit(spec.src, "session_end", f"undelivered;reason=left_cluster;path={spec.src}")
                self.sessions.append(SessionSummary(cl.number, spec.src, spec.dst, req, None, [], False,
                                                    "left_cluster", [], 0, 0.0, None))
            else:
                keep.append((req, spec))
        cl.pending = keep

    def _leave(self, cl: _Cluster, ev: EventSpec):
        radio, cfg = cl.radio, self.cfg
        head = self.scenario.cluster_head_id
        label = ev.args[0]
        try:
            node_id = cl.topology.id_of(label)
        except KeyError:
            self._reject(cl, ev, "not_member")
            return
        try:
            msg = request_leave(label, node_id, radio.now, cl.plan, True, head)
            before = _control_total(self.ledger, cl.number)
            radio.broadcast(FrameKind.BIT0, node_id, [head], cfg.rts, "e_node", "e_rcvCH",
                            detail=f";bit={msg.bit}")
            upd = apply_leave(cl.info, msg)
        except OutsideWindow:
            # earlier requests ran past the window; retry in the next one
            cl.deferred.append((ev.time, ev))
            return
        except MembershipError as exc:
            self._reject(cl, ev, type(exc).__name__)
            return
        radio.remove_node(node_id)
        cl.topology = cl.topology.without_node(node_id)
        cl.links.drop_node(node_id)
        cl.info = upd.table
        radio.emit("head", "table_update", f"leave={label};bit0={';'.join(map(str, upd.table.bit0_list))}")
        radio.broadcast(FrameKind.INFO, head, list(upd.broadcast_to), cfg.data, "e_transCH", "e_rcv",
                        detail=";table", addressed="members")
        spent = _control_total(self.ledger, cl.number) - before
        eq = leave_session_power(0, 1, len(upd.broadcast_to), self.ledger.model)
        self.membership.append(MembershipSummary(radio.now, cl.number, "leave", label, True, "",
                                                 spent, eq))
        self.snapshots.append(TableSnapshot(radio.now, cl.number, f"after leave of {label}", upd.table, msg))
        self._drop_sessions(cl, label)

    def _join(self, cl: _Cluster, ev: EventSpec):
        radio, cfg = cl.radio, self.cfg
        head = self.scenario.cluster_head_id
        label, raw_id, _, *overlap_labels = ev.args
        new_id = NodeId.parse(raw_id)
        if any(n.label == label for n in cl.topology.nodes) or new_id in cl.topology.ids:
            self._reject(cl, ev, "already_member")
            return
        if len(cl.topology.nodes) >= 2 ** cfg.max_n:
            self._reject(cl, ev, "cluster_full")
            return
        overlap = sorted(cl.topology.id_of(o) for o in overlap_labels
                         if any(n.label == o for n in cl.topology.nodes))
        if not overlap:
            self._reject(cl, ev, "NoOverlap")
            return

        before = _control_total(self.ledger, cl.number)
        radio.add_node(new_id, label)
        radio.broadcast(FrameKind.INFO, new_id, overlap, cfg.rts, None, "e_comm", detail=";announce")
        reports = join_reports(cl.info, new_id, overlap)
        for i, rep in enumerate(reports):
            radio.broadcast(FrameKind.INFO, rep.node_id, [head], cfg.data, "e_tr",
                            "e_rcvCH" if i == 0 else None, detail=";report")
        upd = apply_join(cl.info, label, new_id, reports)
        cl.topology = cl.topology.with_node(Node(label, new_id), overlap)
        for o in overlap:
            cl.links.add_link(new_id, o)
        cl.info = upd.table
        radio.emit("head", "table_update", f"join={label};id={new_id}")
        members = [m for m in upd.broadcast_to if m != new_id]
        radio.broadcast(FrameKind.INFO, head, members, cfg.data, "e_transCH", None,
                        detail=";table", addressed="members")
        for newcomer, relay in upd.relayed_by.items():
            radio.broadcast(FrameKind.INFO, relay, [newcomer], cfg.data, detail=";relay")
        spent = _control_total(self.ledger, cl.number) - before
        eq = join_session_power(0, len(reports), len(overlap), self.ledger.model)
        self.membership.append(MembershipSummary(radio.now, cl.number, "join", label, True, "",
                                                 spent, eq))
        self.snapshots.append(TableSnapshot(radio.now, cl.number, f"after join of {label}", upd.table,
                                            reports=tuple(reports)))

    # -- driver ------------------------------------------------------------------
    def run(self) -> RunResult:
        t0 = self._setup()
        work = sorted(
            [(s.time, i, "s", s) for i, s in enumerate(self.scenario.sessions)]
            + [(e.time, i, "e", e) for i, e in enumerate(self.scenario.events)],
            key=lambda w: (w[0], w[2] == "s", w[1]),
        )
        for when, _, tag, item in work:
            fn = self._session_arrival if tag == "s" else self._event_arrival
            self._push(max(when, t0), _ARRIVAL, fn, item)
        while self.heap:
            _, _, _, fn, args = heapq.heappop(self.heap)
            fn(*args)

        energy = {n: self.ledger.buckets(n) for n in sorted(self.ledger.nodes())}
        summary = Summary(
            energy, self.sessions, self.membership,
            {n: c.round + 1 for n, c in sorted(self.clusters.items())},
            {n: c.slot0 for n, c in sorted(self.clusters.items())},
        )
        return RunResult(self.trace, summary, self.setup, self.snapshots)


def run(scenario: Scenario, seed: int | None = None) -> RunResult:
    """Simulate ``scenario``; ``seed`` overrides the scenario's own seed."""
    return Simulator(scenario, seed).run()


def format_summary(summary: Summary) -> str:
    lines = ["energy per node (mJ)"]
    header = ["cluster", "node"] + list(BUCKETS) + ["total"]
    rows = [[str(c), label] + [f"{b[k]:.6f}" for k in BUCKETS] + [f"{sum(b.values()):.6f}"]
            for (c, label), b in summary.energy.items()]
    lines += _align([header] + rows)

    lines += ["", "sessions"]
    header = ["cluster", "src", "dst", "start_ms", "path", "delivered", "reason", "sleepers",
              "ledger_ctl_mj", "equation_mj"]
    rows = []
    for s in summary.sessions:
        sleepers = ";".join(f"{n}={fmt_num(d)}ms" for n, _, d in s.sleepers) or "-"
        rows.append([str(s.cluster), s.src, s.dst, "-" if s.start is None else fmt_ms(s.start),
                     "-".join(s.path) or "-", str(s.delivered).lower(), s.reason, sleepers,
                     f"{s.ledger_control_mj:.6g}", "-" if s.equation_mj is None else f"{s.equation_mj:.6g}"])
    lines += _align([header] + rows)
    total = len(summary.sessions)
    lines.append(f"delivered {summary.delivered}/{total}")
    slept = sorted({n for s in summary.sessions for n, _, _ in s.sleepers})
    lines.append(f"sleepers {len(slept)}: {' '.join(slept) or '-'}")

    if summary.membership:
        lines += ["", "membership"]
        header = ["time_ms", "cluster", "kind", "node", "accepted", "reason", "ledger_ctl_mj", "equation_mj"]
        rows = [[fmt_ms(m.time), str(m.cluster), m.kind, m.label, str(m.accepted).lower(),
                 m.reason or "-", f"{m.ledger_control_mj:.6g}",
                 "-" if m.equation_mj is None else f"{m.equation_mj:.6g}"] for m in summary.membership]
        lines += _align([header] + rows)
    lines += ["", "rounds " + " ".join(f"c{c}={r}" for c, r in summary.rounds.items())]
    return "\n".join(lines) + "\n"


def _align(rows) -> list[str]:
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    return ["  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip() for r in rows]
