"""Per-cluster radio state: node modes, the cluster clock and energy charging.

Idle time is charged lazily. Each node remembers when its energy was last
settled and the elapsed listening or sleeping time is charged the next time the
node does something (or on :meth:`ClusterRadio.flush`).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .energy import EnergyLedger
from .topology import NodeId
from .trace import Trace, fmt_num


class Mode(enum.Enum):
    LISTENING = "Listening"
    TRANSMITTING = "Transmitting"
    RECEIVING = "Receiving"
    SLEEPING = "Sleeping"


class FrameKind(enum.Enum):
    RTS = "rts"
    CTS = "cts"
    DATA = "data"
    ACK = "ack"
    ACK_CONF = "ackconf"
    BIT0 = "bit0"
    INFO = "info"


@dataclass(frozen=True)
class Frame:
    kind: FrameKind
    main_source: NodeId
    current_source: NodeId
    current_destination: NodeId
    final_destination: NodeId
    payload_len: int = 0


# per-event energy charged to the sender of each session frame
FRAME_ENERGY = {
    FrameKind.RTS: "e_rts",
    FrameKind.CTS: "e_cts",
    FrameKind.DATA: "e_trans",
    FrameKind.ACK: "e_ack",
    FrameKind.ACK_CONF: "e_ackconf",
}


@dataclass
class NodeState:
    mode: Mode = Mode.LISTENING
    wake_at: float | None = None


class ClusterRadio:
    def __init__(self, cluster_number: int, labels: dict[NodeId, str], ledger: EnergyLedger,
                 trace: Trace, start: float = 0.0):
        self.cluster_number = cluster_number
        self.ledger = ledger
        self.trace = trace
        self.now = start
        self.labels: dict[NodeId, str] = {}
        self.states: dict[NodeId, NodeState] = {}
        self._since: dict[NodeId, float] = {}
        self.sleep_log: list[tuple[NodeId, float, float]] = []
        for node_id, label in labels.items():
            self.add_node(node_id, label, start)

    # -- bookkeeping -------------------------------------------------------
    def key(self, node_id):
        return (self.cluster_number, self.labels[node_id])

    def name(self, node_id) -> str:
        return self.labels.get(node_id, str(node_id))

    def add_node(self, node_id: NodeId, label: str, t: float | None = None):
        self.labels[node_id] = label
        self.states[node_id] = NodeState()
        self._since[node_id] = self.now if t is None else t
        self.ledger.register(self.key(node_id))

    def remove_node(self, node_id: NodeId, t: float | None = None):
        t = self.now if t is None else t
        self.wake_due(t)
        self._settle(node_id, t)
        del self.states[node_id]
        del self._since[node_id]

    def advance(self, duration: float):
        self.now = round(self.now + duration, 9)

    def set_time(self, t: float):
        self.now = round(t, 9)

    def emit(self, node_id, kind, detail="", energy=0.0, t=None):
        node = self.name(node_id) if isinstance(node_id, NodeId) else node_id
        return self.trace.add(self.now if t is None else t, self.cluster_number, node, kind, detail, energy)

    # -- state ---------------------------------------------------------------
    def is_sleeping(self, node_id: NodeId, t: float | None = None) -> bool:
        t = self.now if t is None else t
        st = self.states.get(node_id)
        return st is not None and st.mode is Mode.SLEEPING and st.wake_at > t

    def sleeping(self, t: float | None = None) -> set[NodeId]:
        return {n for n in self.states if self.is_sleeping(n, t)}

    def _settle(self, node_id, t):
        """Charge listening time from the last settle point up to ``t``."""
        st = self.states[node_id]
        if st.mode is Mode.SLEEPING:
            return
        elapsed = round(t - self._since[node_id], 9)
        if elapsed > 0:
            delta = self.ledger.charge(self.key(node_id), "listen", elapsed)
            self.emit(node_id, "listen", f"duration={fmt_num(elapsed)}ms", delta, t=t)
            self._since[node_id] = t

    def wake_due(self, t: float | None = None):
        t = self.now if t is None else t
        due = sorted(
            (st.wake_at, n) for n, st in self.states.items()
            if st.mode is Mode.SLEEPING and st.wake_at <= t + 1e-9
        )
        for wake_at, n in due:
            slept = round(wake_at - self._since[n], 9)
            delta = self.ledger.charge(self.key(n), "sleep", slept)
            self.emit(n, "sleep_exit", f"slept={fmt_num(slept)}ms", delta, t=wake_at)
            self.states[n] = NodeState()
            self._since[n] = wake_at

    def sleep(self, node_id: NodeId, duration: float):
        t = self.now
        self._settle(node_id, t)
        self.states[node_id] = NodeState(Mode.SLEEPING, round(t + duration, 9))
        self._since[node_id] = t
        self.sleep_log.append((node_id, t, duration))
        self.emit(node_id, "sleep_enter", f"duration={fmt_num(duration)}ms", 0.0)

    def flush(self, t: float | None = None):
        t = self.now if t is None else t
        self.wake_due(t)
        for n in sorted(self.states):
            self._settle(n, t)

    # -- frames ----------------------------------------------------------------
    def transmit(self, frame: Frame, duration: float, delivered: bool = True,
                 tx_energy: str | None = None, rx_energy: str | None = None) -> bool:
        """Send one frame from its current source to its current destination.

        Charges transmit/receive power for ``duration`` plus the optional
        per-event energies, emits send/recv records and advances the clock.
        """
        sender, receiver = frame.current_source, frame.current_destination
        return self.broadcast(frame.kind, sender, [receiver] if delivered else [], duration,
                              tx_energy if tx_energy is not None else FRAME_ENERGY.get(frame.kind),
                              rx_energy, detail=_frame_detail(frame, self),
                              addressed=self.name(receiver))

    def broadcast(self, kind: FrameKind, sender: NodeId, receivers, duration: float,
                  tx_energy: str | None = None, rx_energy: str | None = None,
                  detail: str = "", addressed: str | None = None) -> bool:
        t = self.now
        self.wake_due(t)
        to = addressed if addressed is not None else "+".join(self.name(r) for r in receivers) or "*"
        if sender in self.states:
            self._settle(sender, t)
            delta = self.ledger.charge(self.key(sender), "transmit", duration)
            if tx_energy:
                delta += self.ledger.charge_event(self.key(sender), tx_energy)
            self._since[sender] = round(t + duration, 9)
        else:
            delta = 0.0
        self.emit(sender, "frame_send", f"{kind.value}->{to}{detail}", delta, t=t)
        end = round(t + duration, 9)
        for r in receivers:
            if r not in self.states:
                continue
            self._settle(r, t)
            rdelta = self.ledger.charge(self.key(r), "receive", duration)
            if rx_energy:
                rdelta += self.ledger.charge_event(self.key(r), rx_energy)
            self._since[r] = end
            self.emit(r, "frame_recv", f"{kind.value}<-{self.name(sender)}", rdelta, t=end)
        self.advance(duration)
        return bool(receivers)


def _frame_detail(frame: Frame, radio: ClusterRadio) -> str:
    if frame.kind is not FrameKind.DATA:
        return ""
    return (f";main={frame.main_source};cur_src={frame.current_source}"
            f";cur_dst={frame.current_destination};final={frame.final_destination}"
            f";len={frame.payload_len}")
