import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from helpers import complete_info, random_topology
from wsnsched.energy import EnergyLedger
from wsnsched.radio import ClusterRadio
from wsnsched.scheduler import (
    EmptyCluster,
    LinkState,
    NoCandidate,
    ScheduleConfig,
    Session,
    build_priority_schedule,
    compute_sleep_set,
    hop_distance,
    run_session,
    select_next_hop,
)
from wsnsched.topology import ClusterTopology, Node, nid
from wsnsched.trace import Trace


def radio_for(topo, start=0.0):
    trace = Trace()
    return ClusterRadio(topo.cluster_number, {n.node_id: n.label for n in topo.nodes},
                        EnergyLedger(), trace, start), trace


@pytest.fixture(scope="module")
def info1(cluster1):
    return complete_info(cluster1)


def test_round_zero_is_ascending(cluster1):
    sched = build_priority_schedule(cluster1.ids, 0)
    assert [cluster1.label_of(i) for i in sched.order] == list("BFEADC")


def test_later_rounds_are_permutations(cluster1):
    rng = np.random.default_rng(11)
    for r in range(1, 20):
        sched = build_priority_schedule(cluster1.ids, r, rng, 20.0)
        assert sorted(sched.order) == cluster1.ids
        assert sched.slot_threshold == 20.0


def test_single_node_schedule_and_empty_cluster():
    x = nid("0011")
    assert build_priority_schedule([x], 5, np.random.default_rng(0)).order == (x,)
    with pytest.raises(EmptyCluster):
        build_priority_schedule([], 0)


def test_rotation_can_be_disabled(cluster1):
    sched = build_priority_schedule(cluster1.ids, 3, None, rotate=False)
    assert list(sched.order) == cluster1.ids


def test_next_hop_examples(info1, ids):
    assert select_next_hop(ids["A"], None, info1) == (ids["F"], False)
    assert select_next_hop(ids["F"], ids["A"], info1) == (ids["E"], False)
    assert select_next_hop(ids["D"], None, info1) == (ids["E"], False)


def test_next_hop_fallback(info1, ids):
    links = LinkState(failed=[(ids["A"], ids["F"])])
    assert select_next_hop(ids["A"], None, info1, links) == (ids["B"], True)
    links.fail(ids["A"], ids["B"])
    with pytest.raises(NoCandidate):
        select_next_hop(ids["A"], None, info1, links)


def test_next_hop_prefers_a_neighboring_destination(info1, ids):
    # C is a neighbor of B; it is chosen over A even though A is shallower
    assert select_next_hop(ids["B"], None, info1, destination=ids["C"]) == (ids["C"], False)


def test_next_hop_skips_unavailable(info1, ids):
    assert select_next_hop(ids["A"], None, info1, unavailable={ids["F"]})[0] == ids["B"]
    with pytest.raises(NoCandidate):
        select_next_hop(ids["A"], None, info1, unavailable={ids["F"], ids["B"]})


@settings(max_examples=50)
@given(st.integers(1, 9))
def test_argmin_is_invariant_to_depth_scaling(factor):
    rng = np.random.default_rng(factor)
    from dataclasses import replace

    topo = random_topology(rng)
    info = complete_info(topo)
    scaled = replace(info, records=tuple(replace(r, depths=tuple(d * factor for d in r.depths))
                                         for r in info.records))
    for node in info.ids:
        if not info.neighbors(node):
            continue
        assert select_next_hop(node, None, info) == select_next_hop(node, None, scaled)


def test_fallback_picks_the_deepest_remaining(cluster2, ids):
    info = complete_info(cluster2)
    # G's neighbors: H (2), L (3), I (1); failing G-I leaves L as the deepest
    links = LinkState(failed=[(ids["G"], ids["I"])])
    assert select_next_hop(ids["G"], None, info, links) == (ids["L"], True)


def test_hop_distance(info1, ids):
    assert hop_distance(info1, ids["A"], ids["D"]) == 3
    assert hop_distance(info1, ids["F"], ids["D"]) == 2
    assert hop_distance(info1, ids["D"], ids["D"]) == 0


def test_sleep_sets_along_the_walkthrough(info1, ids):
    session = Session(ids["A"], ids["D"], info1, ScheduleConfig(), 0.0, 20.0, [ids["A"]])
    assert compute_sleep_set((ids["A"], ids["F"]), session, 0.0) == [(ids["B"], 6.0)]
    session.path.append(ids["F"])
    assert compute_sleep_set((ids["F"], ids["E"]), session, 2.0, sleeping={ids["A"]}) == []
    session.path.append(ids["E"])
    assert compute_sleep_set((ids["E"], ids["D"]), session, 4.0) == [(ids["C"], 2.0)]


def test_walkthrough_session(cluster1, info1, ids):
    radio, trace = radio_for(cluster1)
    res = run_session(ids["A"], ids["D"], info1, LinkState(cluster1.links), radio)
    assert res.delivered and res.reason == "delivered"
    assert [cluster1.label_of(n) for n in res.path] == list("AFED")
    durations = {cluster1.label_of(n): d for n, _, d in res.sleep_intervals}
    assert durations == {"B": 6.0, "A": 6.0, "F": 4.0, "C": 2.0}
    assert all(h.handshake == "ok" for h in res.hop_outcomes)
    # the wake guarantee
    assert max(s + d for _, s, d in res.sleep_intervals) <= res.end_time
    assert ids["D"] not in res.sleepers and ids["E"] not in res.sleepers


def test_sleepers_never_relay_later(cluster1, info1, ids):
    radio, _ = radio_for(cluster1)
    res = run_session(ids["B"], ids["D"], info1, LinkState(cluster1.links), radio)
    for node, start, _ in res.sleep_intervals:
        if node in res.path:
            assert res.path.index(node) < len(res.path) - 1
            relay = next(h for h in res.hop_outcomes if h.sender == node)
            assert relay.end <= start + 1e-9


def test_link_failure_fallback(cluster1, info1, ids):
    radio, trace = radio_for(cluster1)
    links = LinkState(cluster1.links, failed=[(ids["A"], ids["F"])])
    res = run_session(ids["A"], ids["D"], info1, links, radio)
    assert res.hop_outcomes[0].handshake == "cts_timeout"
    assert res.hop_outcomes[1].receiver == ids["B"] and res.hop_outcomes[1].fallback
    assert res.delivered and [cluster1.label_of(n) for n in res.path] == list("ABCD")
    assert any(r.kind == "cts_timeout" for r in trace)


def test_both_sides_failed(cluster1, info1, ids):
    radio, _ = radio_for(cluster1)
    links = LinkState(cluster1.links, failed=[(ids["A"], ids["F"]), (ids["A"], ids["B"])])
    res = run_session(ids["A"], ids["D"], info1, links, radio)
    assert not res.delivered and res.reason == "both_sides_failed"
    assert res.hop_outcomes[-1].handshake == "failed_both"
    assert res.path == [ids["A"]]


def test_two_node_cluster():
    x, y = nid("0001"), nid("0010")
    topo = ClusterTopology.build(1, [Node("x", x), Node("y", y)], [(x, y)])
    radio, _ = radio_for(topo)
    res = run_session(x, y, complete_info(topo), LinkState(topo.links), radio)
    assert res.delivered and res.path == [x, y] and res.sleep_intervals == []


def test_slot_expiry(cluster1, info1, ids):
    radio, _ = radio_for(cluster1)
    cfg = ScheduleConfig(slot_threshold=3.0)
    res = run_session(ids["A"], ids["D"], info1, LinkState(cluster1.links), radio, cfg)
    assert not res.delivered and res.reason == "slot_expired"
    assert max(s + d for _, s, d in res.sleep_intervals) <= res.end_time + 1e-9


def test_same_endpoints_rejected(cluster1, info1, ids):
    radio, _ = radio_for(cluster1)
    with pytest.raises(ValueError):
        run_session(ids["A"], ids["A"], info1, LinkState(), radio)


def test_exactly_one_main_sender_rts(cluster1, info1, ids):
    radio, trace = radio_for(cluster1)
    run_session(ids["A"], ids["D"], info1, LinkState(cluster1.links), radio)
    sends = [r for r in trace if r.kind == "frame_send" and r.detail.startswith("rts")]
    assert [r.node for r in sends] == ["A", "F", "E"]


def test_session_is_deterministic(cluster1, info1, ids):
    from wsnsched.trace import format_record

    outs = []
    for _ in range(2):
        radio, trace = radio_for(cluster1)
        run_session(ids["A"], ids["D"], info1, LinkState(cluster1.links), radio)
        outs.append([format_record(r) for r in trace])
    assert outs[0] == outs[1]


def test_config_validation():
    with pytest.raises(ValueError):
        ScheduleConfig(slot_threshold=0)
    with pytest.raises(ValueError):
        ScheduleConfig(rts=-1)
    assert ScheduleConfig().hop_time == pytest.approx(1.8)
    assert ScheduleConfig(head_window=5).window == 5
