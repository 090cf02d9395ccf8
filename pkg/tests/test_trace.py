import io

import pytest
from hypothesis import given, strategies as st

from helpers import complete_info
from wsnsched.energy import EnergyLedger
from wsnsched.radio import ClusterRadio, Frame, FrameKind
from wsnsched.scheduler import LinkState, run_session
from wsnsched.trace import Trace, TraceRecord, emit_trace, format_record, parse_record


def _walkthrough(cluster1, ids):
    trace = Trace()
    ledger = EnergyLedger()
    radio = ClusterRadio(1, {n.node_id: n.label for n in cluster1.nodes}, ledger, trace)
    res = run_session(ids["A"], ids["D"], complete_info(cluster1), LinkState(cluster1.links), radio)
    radio.flush(res.end_time)
    return trace, ledger


def test_trace_lines_from_a_session_at_time_zero(cluster1, ids):
    trace, _ = _walkthrough(cluster1, ids)
    lines = [format_record(r) for r in trace]
    assert lines[0] == "0.0,1,A,session_start,A->D,0"
    assert "0.0,1,A,frame_send,rts->F,1.012" in lines
    assert "0.4,1,B,sleep_enter,duration=6ms,0" in lines
    assert sum(1 for r in trace if r.kind == "sleep_enter") == 4


def test_empty_trace_writes_nothing():
    sink = io.StringIO()
    emit_trace(Trace(), sink)
    assert sink.getvalue() == ""


def test_write_errors_propagate():
    class Broken(io.StringIO):
        def write(self, _):
            raise OSError("disk full")

    trace = Trace()
    trace.add(0.0, 1, "A", "listen")
    with pytest.raises(OSError):
        emit_trace(trace, Broken())


def test_records_sorted_by_time_then_emission():
    trace = Trace()
    trace.add(2.0, 1, "A", "x")
    trace.add(1.0, 1, "B", "y")
    trace.add(1.0, 1, "C", "z")
    assert [r.node for r in trace] == ["B", "C", "A"]


def test_detail_may_not_hold_commas():
    with pytest.raises(ValueError):
        TraceRecord(0.0, 1, "A", "x", "a,b")


@given(st.floats(0, 1e6, allow_nan=False), st.integers(0, 99),
       st.sampled_from(["A", "router", "head"]), st.floats(0, 100, allow_nan=False))
def test_format_parse_round_trip(t, cluster, node, energy):
    rec = TraceRecord(round(t, 6), cluster, node, "listen", "duration=1ms", round(energy, 5))
    back = parse_record(format_record(rec))
    assert back.time_ms == pytest.approx(rec.time_ms)
    assert (back.cluster, back.node, back.kind, back.detail) == (cluster, node, "listen", "duration=1ms")
    assert back.energy_delta_mj == pytest.approx(rec.energy_delta_mj, rel=1e-5, abs=1e-9)


def test_ledger_matches_trace_deltas(cluster1, ids):
    trace, ledger = _walkthrough(cluster1, ids)
    for key in ledger.nodes():
        summed = sum(r.energy_delta_mj for r in trace if r.node == key[1])
        assert summed == pytest.approx(ledger.total(key))


def test_sleeping_node_is_woken_and_charged(cluster1, ids):
    trace, ledger = Trace(), EnergyLedger()
    radio = ClusterRadio(1, {ids["A"]: "A", ids["B"]: "B"}, ledger, trace)
    radio.sleep(ids["B"], 6.0)
    assert radio.is_sleeping(ids["B"])
    radio.advance(10.0)
    radio.wake_due()
    assert not radio.is_sleeping(ids["B"])
    assert ledger.buckets((1, "B"))["sleep"] == pytest.approx(0.00054)
    exit_rec = [r for r in trace if r.kind == "sleep_exit"][0]
    assert exit_rec.time_ms == 6.0


def test_lost_frame_reaches_nobody(ids):
    trace, ledger = Trace(), EnergyLedger()
    radio = ClusterRadio(1, {ids["A"]: "A", ids["F"]: "F"}, ledger, trace)
    radio.transmit(Frame(FrameKind.RTS, ids["A"], ids["A"], ids["F"], ids["D"]), 0.2, delivered=False)
    assert not [r for r in trace if r.kind == "frame_recv"]
    assert ledger.buckets((1, "A"))["control"] == 1.0
