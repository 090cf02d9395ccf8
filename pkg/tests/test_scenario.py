import pytest
from hypothesis import given, settings, strategies as st

from wsnsched.energy import EnergyModel
from wsnsched.scenario import (
    EventSpec,
    ScenarioSyntaxError,
    ScenarioValidationError,
    SessionSpec,
    bundled_scenarios,
    format_scenario,
    load_scenario,
    parse_scenario,
    read_scenario_text,
)
from wsnsched.scheduler import ScheduleConfig
from wsnsched.topology import nid

MINI = """
cluster 1
node A 0001
node B 0010
edge A B
"""


def test_figure1_contents(figure1):
    assert len(figure1.clusters) == 2
    assert sum(len(c.nodes) for c in figure1.clusters) == 12
    c1 = {n.label: str(n.node_id) for n in figure1.clusters[0].nodes}
    assert c1 == dict(A="0100", B="0001", C="0111", D="0101", E="0011", F="0010")
    c2 = {n.label: str(n.node_id) for n in figure1.clusters[1].nodes}
    assert c2 == dict(G="1010", H="1100", I="1011", J="1111", K="1110", L="1101")
    assert figure1.sessions == (SessionSpec(0.0, "A", "D"),)


@pytest.mark.parametrize("text", ["", "# only a comment\n", "seed 3\n"])
def test_no_cluster(text):
    with pytest.raises(ScenarioValidationError) as err:
        parse_scenario(text)
    assert err.value.problems == ["no cluster defined"]


def test_router_is_not_an_endpoint():
    with pytest.raises(ScenarioValidationError) as err:
        parse_scenario(MINI + "session 0 A 1000\n")
    assert any("router" in p for p in err.value.problems)


def test_endpoints_given_as_ids_resolve_to_labels():
    sc = parse_scenario(MINI + "session 5 0001 0010\n")
    assert sc.sessions == (SessionSpec(5.0, "A", "B"),)


@pytest.mark.parametrize("text,line", [
    ("cluster 1\nnode A 0001\nfrobnicate\n", 3),
    ("node A 0001\n", 1),
    ("cluster 1\nnode A 0021\n", 2),
    ("cluster x\n", 1),
    ("energy p_warp 3\ncluster 1\n", 1),
    ("cluster 1\nschedule slot_threshold fast\n", 2),
    ("seed -1\n", 1),
    ("cluster 1\nsession -2 A B\n", 2),
    ("cluster 1\nevent 0 teleport A\n", 2),
    ("cluster 1\nevent 0 join G 1010 near B\n", 2),
    ("cluster 1\nnode A 0001 at 1 2\n", 2),
])
def test_syntax_errors_carry_line_numbers(text, line):
    with pytest.raises(ScenarioSyntaxError) as err:
        parse_scenario(text)
    assert err.value.line == line


def test_semantic_errors_are_aggregated():
    text = MINI + "edge A Z\nsession 0 A Q\nevent 0 leave A\nnode C 1001\n"
    with pytest.raises(ScenarioValidationError) as err:
        parse_scenario(text)
    problems = " | ".join(err.value.problems)
    assert "unknown node Z" in problems
    assert "Q is not a node" in problems
    assert "need mode dynamic" in problems
    assert len(err.value.problems) >= 3


def test_overrides_and_defaults():
    sc = parse_scenario("energy p_tx 75\nschedule base_slot 3\nschedule rotate 0\n" + MINI)
    assert sc.energy == EnergyModel(p_tx=75.0)
    assert sc.schedule == ScheduleConfig(base_slot=3.0, rotate=False)


def test_auto_ids_are_seeded():
    text = "seed 9\ncluster 1\nnode A auto\nnode B auto\nnode C 0001\n"
    a = parse_scenario(text).topologies()
    b = parse_scenario(text).topologies()
    assert a[0].ids == b[0].ids
    assert nid("0001") in a[0].ids
    assert not {nid("1000"), nid("1001")} & set(a[0].ids)


def test_positions_yield_geometric_links():
    sc = parse_scenario("cluster 1\nnode A 0001 at 0 0 1\nnode B 0010 at 1.5 0 1\nnode C 0011 at 9 9 1\n")
    (topo,) = sc.topologies()
    assert len(topo.links) == 1


def test_events_keep_declaration_order():
    sc = parse_scenario(MINI + "event 3 link_fail A B\nevent 1 link_heal A B\n")
    assert [e.kind for e in sc.events] == ["link_fail", "link_heal"]
    assert sc.events[0] == EventSpec(3.0, "link_fail", ("A", "B"))


@pytest.mark.parametrize("name", bundled_scenarios())
def test_bundled_fixpoint(name):
    sc = load_scenario(name)
    again = parse_scenario(format_scenario(sc))
    assert again == sc
    assert format_scenario(again) == format_scenario(sc)


def test_unknown_file():
    with pytest.raises(FileNotFoundError):
        read_scenario_text("no_such_scenario.scn")


@st.composite
def scenarios(draw):
    n = draw(st.integers(1, 6))
    names = list("ABCDEF")[:n]
    idvals = draw(st.lists(st.sampled_from([v for v in range(16) if v not in (8, 9)]),
                           min_size=n, max_size=n, unique=True))
    lines = [f"seed {draw(st.integers(0, 2**64 - 1))}",
             f"schedule slot_threshold {draw(st.floats(1, 100, allow_nan=False))!r}",
             f"energy p_lst {draw(st.floats(0, 100, allow_nan=False))!r}", "cluster 1"]
    for name, v in zip(names, idvals):
        lines.append(f"node {name} {v:04b}")
    pairs = [(a, b) for i, a in enumerate(names) for b in names[i + 1:]]
    for a, b in draw(st.lists(st.sampled_from(pairs), unique=True)) if pairs else []:
        lines.append(f"edge {a} {b}")
    for _ in range(draw(st.integers(0, 3))) if n > 1 else []:
        a, b = draw(st.sampled_from(pairs))
        lines.append(f"session {draw(st.floats(0, 500, allow_nan=False))!r} {a} {b}")
    return "\n".join(lines) + "\n"


@settings(max_examples=60)
@given(scenarios())
def test_generated_fixpoint(text):
    sc = parse_scenario(text)
    assert parse_scenario(format_scenario(sc)) == sc
