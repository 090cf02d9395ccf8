"""Power constants, the slot/session energy equations and a per-node ledger.

Units: state powers in mW (sleep in uW), per-event energies in mJ, times in ms.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, fields, replace


class EnergyError(Exception):
    pass


class MultipleStates(EnergyError):
    pass


class KTooLarge(EnergyError):
    pass


class NegativeDuration(EnergyError):
    pass


@dataclass(frozen=True)
class EnergyModel:
    p_tx: float = 60.0
    p_rcv: float = 45.0
    p_lst: float = 45.0
    p_slp: float = 90.0  # uW
    e_rts: float = 1.0
    e_cts: float = 1.0
    e_trans: float = 1.0
    e_ack: float = 1.0
    e_ackconf: float = 1.0
    e_node: float = 1.0
    e_transCH: float = 1.0
    e_rcvCH: float = 1.0
    e_rcv: float = 1.0
    e_tr: float = 1.0
    e_comm: float = 1.0
    slot_ts: float = 1000.0

    def __post_init__(self):
        for f in fields(self):
            if getattr(self, f.name) < 0:
                raise ValueError(f"{f.name} must be >= 0")

    @classmethod
    def keys(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def with_overrides(self, **values) -> "EnergyModel":
        return replace(self, **values)

    def power_mw(self, state: str) -> float:
        """Power drawn in a radio state, in mW."""
        return {
            "transmit": self.p_tx,
            "receive": self.p_rcv,
            "listen": self.p_lst,
            "sleep": self.p_slp / 1000.0,
        }[state]

    @property
    def handshake_energy(self) -> float:
        """rts + cts + data + ack + ack-confirmation, per involved node."""
        return self.e_rts + self.e_cts + self.e_trans + self.e_ack + self.e_ackconf


@dataclass(frozen=True)
class StateIndicators:
    x_s: int = 0
    x_r: int = 0
    x_l: int = 0
    x_p: int = 0

    @classmethod
    def of(cls, state: str) -> "StateIndicators":
        key = {"transmit": "x_s", "receive": "x_r", "listen": "x_l", "sleep": "x_p"}[state]
        return cls(**{key: 1})

    def check(self):
        values = (self.x_s, self.x_r, self.x_l, self.x_p)
        if any(v not in (0, 1) for v in values):
            raise ValueError("indicators must be 0 or 1")
        if sum(values) > 1:
            raise MultipleStates("a node is in at most one state per slot")


def state_slot_cost(ind: StateIndicators, m: EnergyModel = EnergyModel()) -> float:
    """Energy (mJ) of one node over one slot of ``m.slot_ts`` ms."""
    ind.check()
    power = (ind.x_s * m.p_tx + ind.x_r * m.p_rcv + ind.x_l * m.p_lst
             + ind.x_p * m.p_slp / 1000.0)
    return power * m.slot_ts / 1000.0


def proposed_slot_cost(k: int, ind_sender: StateIndicators, m: EnergyModel = EnergyModel(),
                       ind_peer: StateIndicators | None = None) -> float:
    """Slot cost with ``k`` receiving/idle-listening peers; sleep is left out.

    Evaluated as written: the rts/cts event energies sit inside the bracket
    that is scaled by the slot length (in seconds). ``ind_peer`` supplies the
    receive/listen indicators of the k-term and defaults to ``ind_sender``.
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    ind_sender.check()
    peer = ind_sender if ind_peer is None else ind_peer
    peer.check()
    bracket = ind_sender.x_s * m.p_tx + k * (
        peer.x_r * m.p_rcv + peer.x_l * m.p_lst + (m.e_rts + m.e_cts)
    )
    return bracket * m.slot_ts / 1000.0


def _check_k(k, cluster_size):
    if k < 0:
        raise ValueError("k must be >= 0")
    if cluster_size is not None and k >= cluster_size:
        raise KTooLarge(f"k={k} must be smaller than the cluster size {cluster_size}")


def static_session_power(k: int, m: EnergyModel = EnergyModel(), cluster_size: int | None = None) -> float:
    _check_k(k, cluster_size)
    return k * m.handshake_energy


def leave_session_power(k: int, v: int, n: int, m: EnergyModel = EnergyModel(),
                        cluster_size: int | None = None) -> float:
    _check_k(k, cluster_size)
    if v < 0 or n < 0:
        raise ValueError("counts must be >= 0")
    return k * m.handshake_energy + v * m.e_node + m.e_transCH + m.e_rcvCH + n * m.e_rcv


def join_session_power(k: int, h: int, b: int, m: EnergyModel = EnergyModel(),
                       cluster_size: int | None = None) -> float:
    _check_k(k, cluster_size)
    if h < 0 or b < 0:
        raise ValueError("counts must be >= 0")
    return k * m.handshake_energy + h * m.e_tr + m.e_transCH + m.e_rcvCH + b * m.e_comm


BUCKETS = ("transmit", "receive", "listen", "sleep", "control")


class EnergyLedger:
    """Accumulated energy per node and state bucket, in mJ."""

    def __init__(self, model: EnergyModel = EnergyModel()):
        self.model = model
        self._acc = defaultdict(lambda: dict.fromkeys(BUCKETS, 0.0))

    def charge(self, node, state: str, duration_ms: float) -> float:
        if duration_ms < 0:
            raise NegativeDuration(f"duration {duration_ms} < 0")
        if duration_ms == 0:
            return 0.0
        delta = self.model.power_mw(state) * duration_ms / 1000.0
        self._acc[node][state] += delta
        return delta

    def charge_event(self, node, energy_key: str) -> float:
        """Add one per-event energy (``e_*`` field of the model) to the control bucket."""
        delta = getattr(self.model, energy_key)
        self._acc[node]["control"] += delta
        return delta

    def register(self, node):
        self._acc[node]

    def buckets(self, node) -> dict[str, float]:
        return dict(self._acc[node])

    def total(self, node) -> float:
        return sum(self._acc[node].values())

    def nodes(self):
        return list(self._acc)

    def __contains__(self, node):
        return node in self._acc
