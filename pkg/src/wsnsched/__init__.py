"""Adjacency-matrix sleep/wake scheduling for clustered wireless sensor networks."""

from .control_plane import (
    AdjacencyMatrix,
    CompleteInfoTable,
    broadcast_complete_info,
    build_adjacency_matrix,
    converge_cast,
    derive_complete_info,
    forward_to_controller,
)
from .dynamics import ClusterHeadTable, apply_join, apply_leave, announce_join, request_leave
from .energy import EnergyLedger, EnergyModel, state_slot_cost, static_session_power
from .scenario import Scenario, format_scenario, load_scenario, parse_scenario
from .scheduler import LinkState, ScheduleConfig, build_priority_schedule, run_session, select_next_hop
from .simulator import format_summary, run
from .tables import emit_tables
from .topology import ClusterTopology, Node, NodeId, depth, nid
from .trace import Trace, TraceRecord, emit_trace

__version__ = "0.1.0"
