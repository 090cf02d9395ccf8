"""Line-oriented scenario files.

::

    # comment
    seed 7
    mode static|dynamic
    router 1000
    controller 1001
    clusterhead 10000
    energy p_tx 60
    schedule slot_threshold 20
    cluster 1
    node A 0100                 # or "node A auto", optionally "at <x> <y> <range>"
    edge A B
    order F A E                 # F lists its neighbors as A, then E
    session 0 A D
    event 0 leave A
    event 0 join G 1010 overlap B
    event 0 link_fail A F
    event 5 link_heal A F
"""

from __future__ import annotations

import shlex
from dataclasses import dataclass, field, fields, replace
from importlib import resources
from pathlib import Path

import numpy as np

from .energy import EnergyModel
from .scheduler import ScheduleConfig
from .topology import (
    CLUSTER_HEAD_ID,
    CONTROLLER_ID,
    ROUTER_ID,
    ClusterTopology,
    Node,
    NodeId,
    NodePosition,
    TopologyError,
    assign_ids,
    validate_topology,
)

RESERVED_LABELS = {"router", "controller", "head", "-"}
EVENT_KINDS = ("leave", "join", "link_fail", "link_heal")


class ScenarioError(Exception):
    pass


class ScenarioSyntaxError(ScenarioError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class ScenarioValidationError(ScenarioError):
    def __init__(self, problems: list[str]):
        super().__init__("; ".join(problems))
        self.problems = problems


@dataclass(frozen=True)
class NodeSpec:
    label: str
    node_id: NodeId | None = None
    position: NodePosition | None = None


@dataclass(frozen=True)
class ClusterSpec:
    number: int
    nodes: tuple[NodeSpec, ...] = ()
    edges: tuple[tuple[str, str], ...] = ()
    orders: tuple[tuple[str, tuple[str, ...]], ...] = ()

    @property
    def labels(self) -> list[str]:
        return [n.label for n in self.nodes]


@dataclass(frozen=True)
class SessionSpec:
    time: float
    src: str
    dst: str


@dataclass(frozen=True)
class EventSpec:
    time: float
    kind: str
    args: tuple[str, ...]


@dataclass(frozen=True)
class Scenario:
    clusters: tuple[ClusterSpec, ...] = ()
    mode: str = "static"
    energy: EnergyModel = field(default_factory=EnergyModel)
    schedule: ScheduleConfig = field(default_factory=ScheduleConfig)
    sessions: tuple[SessionSpec, ...] = ()
    events: tuple[EventSpec, ...] = ()
    seed: int = 0
    router_id: NodeId = ROUTER_ID
    controller_id: NodeId = CONTROLLER_ID
    cluster_head_id: NodeId = CLUSTER_HEAD_ID

    @property
    def dynamic(self) -> bool:
        return self.mode == "dynamic"

    def topologies(self, rng=None) -> list[ClusterTopology]:
        """Materialize every cluster, drawing auto IDs from ``rng``."""
        if rng is None:
            rng = np.random.default_rng(self.seed)
        taken = {n.node_id for c in self.clusters for n in c.nodes if n.node_id is not None}
        out = []
        for c in self.clusters:
            own = {n.label: n.node_id for n in c.nodes if n.node_id is not None}
            assignment = assign_ids(
                c.labels, self.router_id, self.controller_id,
                self.cluster_head_id if self.dynamic else None,
                explicit=own, rng=rng, taken=taken - set(own.values()),
            )
            taken |= set(assignment.ids.values())
            nodes = [Node(n.label, assignment.ids[n.label], n.position) for n in c.nodes]
            links = list(c.edges) if c.edges or not all(n.position for n in c.nodes) else None
            out.append(ClusterTopology.build(
                c.number, nodes, links,
                router_id=self.router_id,
                controller_id=self.controller_id,
                cluster_head_id=self.cluster_head_id if self.dynamic else None,
                neighbor_order={k: list(v) for k, v in c.orders},
                max_n=self.schedule.max_n,
            ))
        return out


def _parse_value(cls, key, raw, lineno):
    names = {f.name: f for f in fields(cls)}
    if key not in names:
        raise ScenarioSyntaxError(lineno, f"unknown {cls.__name__} key {key!r}")
    default = getattr(cls(), key)
    try:
        if isinstance(default, bool):
            if raw.lower() not in ("0", "1", "true", "false"):
                raise ValueError(raw)
            return raw.lower() in ("1", "true")
        if isinstance(default, int) and not isinstance(default, float):
            return int(raw)
        if raw.lower() == "none" and names[key].default is None:
            return None
        return float(raw)
    except ValueError:
        raise ScenarioSyntaxError(lineno, f"bad value {raw!r} for {key}") from None


def _num(raw, lineno, what="number"):
    try:
        value = float(raw)
    except ValueError:
        raise ScenarioSyntaxError(lineno, f"expected a {what}, got {raw!r}") from None
    if value < 0:
        raise ScenarioSyntaxError(lineno, f"{what} must be non-negative")
    return value


def _id(raw, lineno):
    try:
        return NodeId.parse(raw)
    except ValueError as exc:
        raise ScenarioSyntaxError(lineno, str(exc)) from None


def parse_scenario(text: str, validate: bool = True) -> Scenario:
    clusters: list[dict] = []
    top = {"mode": "static", "seed": 0, "router_id": ROUTER_ID, "controller_id": CONTROLLER_ID,
           "cluster_head_id": CLUSTER_HEAD_ID}
    energy, schedule = {}, {}
    sessions, events = [], []
    current = None

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            tok = shlex.split(line)
        except ValueError as exc:
            raise ScenarioSyntaxError(lineno, str(exc)) from None
        word, args = tok[0], tok[1:]

        def arity(n, exact=True):
            if (len(args) != n) if exact else (len(args) < n):
                raise ScenarioSyntaxError(lineno, f"{word} takes {'' if exact else 'at least '}{n} argument(s)")

        if word == "seed":
            arity(1)
            try:
                seed = int(args[0])
            except ValueError:
                raise ScenarioSyntaxError(lineno, "seed must be an integer") from None
            if not 0 <= seed < 2 ** 64:
                raise ScenarioSyntaxError(lineno, "seed must fit in 64 unsigned bits")
            top["seed"] = seed
        elif word == "mode":
            arity(1)
            if args[0] not in ("static", "dynamic"):
                raise ScenarioSyntaxError(lineno, "mode is static or dynamic")
            top["mode"] = args[0]
        elif word in ("router", "controller", "clusterhead"):
            arity(1)
            key = {"router": "router_id", "controller": "controller_id", "clusterhead": "cluster_head_id"}[word]
            top[key] = _id(args[0], lineno)
        elif word == "energy":
            arity(2)
            energy[args[0]] = _parse_value(EnergyModel, args[0], args[1], lineno)
        elif word == "schedule":
            arity(2)
            schedule[args[0]] = _parse_value(ScheduleConfig, args[0], args[1], lineno)
        elif word == "cluster":
            arity(1)
            try:
                number = int(args[0])
            except ValueError:
                raise ScenarioSyntaxError(lineno, "cluster number must be an integer") from None
            if number < 1:
                raise ScenarioSyntaxError(lineno, "cluster number must be positive")
            current = {"number": number, "nodes": [], "edges": [], "orders": [], "line": lineno}
            clusters.append(current)
        elif word in ("node", "edge", "order"):
            if current is None:
                raise ScenarioSyntaxError(lineno, f"{word} before any cluster directive")
            if word == "node":
                current["nodes"].append(_parse_node(args, lineno))
            elif word == "edge":
                arity(2)
                current["edges"].append((args[0], args[1]))
            else:
                arity(2, exact=False)
                current["orders"].append((args[0], tuple(args[1:])))
        elif word == "session":
            arity(3)
            sessions.append((SessionSpec(_num(args[0], lineno, "time"), args[1], args[2]), lineno))
        elif word == "event":
            arity(2, exact=False)
            events.append((_parse_event(args, lineno), lineno))
        else:
            raise ScenarioSyntaxError(lineno, f"unknown directive {word!r}")

    try:
        energy_model = EnergyModel(**energy)
        sched = ScheduleConfig(**schedule)
    except ValueError as exc:
        raise ScenarioValidationError([str(exc)]) from None

    scenario = Scenario(
        clusters=tuple(
            ClusterSpec(c["number"], tuple(c["nodes"]), tuple(c["edges"]), tuple(c["orders"]))
            for c in clusters
        ),
        mode=top["mode"],
        energy=energy_model,
        schedule=sched,
        sessions=tuple(s for s, _ in sessions),
        events=tuple(e for e, _ in events),
        seed=top["seed"],
        router_id=top["router_id"],
        controller_id=top["controller_id"],
        cluster_head_id=top["cluster_head_id"],
    )
    scenario = _resolve_endpoints(scenario)
    if validate:
        problems = validate_scenario(scenario)
        if problems:
            raise ScenarioValidationError(problems)
    return scenario


def _parse_node(args, lineno) -> NodeSpec:
    if not args:
        raise ScenarioSyntaxError(lineno, "node needs a label")
    label, rest = args[0], args[1:]
    node_id = None
    if rest and rest[0] != "at":
        node_id = None if rest[0] == "auto" else _id(rest[0], lineno)
        rest = rest[1:]
    position = None
    if rest:
        if rest[0] != "at" or len(rest) != 4:
            raise ScenarioSyntaxError(lineno, "expected 'at <x> <y> <range>'")
        try:
            x, y, r = (float(v) for v in rest[1:])
        except ValueError:
            raise ScenarioSyntaxError(lineno, "position values must be numbers") from None
        position = NodePosition(x, y, r)
    return NodeSpec(label, node_id, position)


def _parse_event(args, lineno) -> EventSpec:
    time = _num(args[0], lineno, "time")
    kind, rest = args[1], tuple(args[2:])
    if kind == "leave" and len(rest) == 1:
        return EventSpec(time, kind, rest)
    if kind == "join" and len(rest) >= 4 and rest[2] == "overlap":
        _id(rest[1], lineno)
        return EventSpec(time, kind, rest)
    if kind in ("link_fail", "link_heal") and len(rest) == 2:
        return EventSpec(time, kind, rest)
    if kind not in EVENT_KINDS:
        raise ScenarioSyntaxError(lineno, f"unknown event kind {kind!r}")
    raise ScenarioSyntaxError(lineno, f"malformed {kind} event")


def _resolve_endpoints(scenario: Scenario) -> Scenario:
    """Session endpoints written as binary IDs become labels when a node has that ID."""
    by_id = {n.node_id: n.label for c in scenario.clusters for n in c.nodes if n.node_id is not None}
    reserved = {scenario.router_id, scenario.controller_id, scenario.cluster_head_id}

    def resolve(token):
        try:
            node_id = NodeId.parse(token)
        except ValueError:
            return token
        if node_id in reserved:
            return token
        return by_id.get(node_id, token)

    sessions = tuple(SessionSpec(s.time, resolve(s.src), resolve(s.dst)) for s in scenario.sessions)
    return replace(scenario, sessions=sessions)


def validate_scenario(scenario: Scenario) -> list[str]:
    problems = []
    if not scenario.clusters:
        return ["no cluster defined"]
    numbers = [c.number for c in scenario.clusters]
    for n in sorted({n for n in numbers if numbers.count(n) > 1}):
        problems.append(f"cluster {n} defined twice")

    reserved = {scenario.router_id: "router", scenario.controller_id: "controller",
                scenario.cluster_head_id: "cluster head"}
    if len(reserved) < 3:
        problems.append("router, controller and cluster head IDs must differ")

    member_cluster: dict[str, set[int]] = {}
    seen_ids: dict[NodeId, str] = {}
    for c in scenario.clusters:
        labels = set()
        for n in c.nodes:
            if n.label in RESERVED_LABELS:
                problems.append(f"label {n.label!r} is reserved")
            if n.label in member_cluster:
                problems.append(f"label {n.label} appears in more than one cluster")
            if n.label in labels:
                problems.append(f"label {n.label} repeated in cluster {c.number}")
            labels.add(n.label)
            member_cluster.setdefault(n.label, set()).add(c.number)
            if n.node_id is not None and n.node_id not in reserved:
                if n.node_id in seen_ids and seen_ids[n.node_id] != n.label:
                    problems.append(f"id {n.node_id} used by both {seen_ids[n.node_id]} and {n.label}")
                seen_ids[n.node_id] = n.label
        for a, b in c.edges:
            for end in (a, b):
                if end not in labels:
                    problems.append(f"edge {a}-{b} in cluster {c.number} names unknown node {end}")
        for owner, order in c.orders:
            for end in (owner,) + order:
                if end not in labels:
                    problems.append(f"order for {owner} names unknown node {end}")

    if not problems:
        try:
            topologies = scenario.topologies()
        except (TopologyError, ValueError) as exc:
            problems.append(str(exc))
            topologies = []
        for topo in topologies:
            for v in validate_topology(topo):
                problems.append(f"cluster {topo.cluster_number}: {v.kind}: {v.detail}")

    joined: dict[str, set[int]] = {}
    for e in scenario.events:
        if e.kind in ("leave", "join") and not scenario.dynamic:
            problems.append(f"{e.kind} events need mode dynamic")
        if e.kind == "join":
            label, raw_id, _, *overlap = e.args
            new_id = NodeId.parse(raw_id)
            if new_id in reserved:
                problems.append(f"join of {label} uses the {reserved[new_id]} id")
            if new_id.width != 4:
                problems.append(f"join of {label} needs a 4-bit id")
            homes = set()
            for o in overlap:
                homes |= member_cluster.get(o, set()) | joined.get(o, set())
                if o not in member_cluster and o not in joined:
                    problems.append(f"join of {label} overlaps unknown node {o}")
            if len(homes) > 1:
                problems.append(f"join of {label} overlaps nodes of several clusters")
            joined.setdefault(label, set()).update(homes)
        elif e.kind == "leave":
            if e.args[0] not in member_cluster and e.args[0] not in joined:
                problems.append(f"leave names unknown node {e.args[0]}")
        else:
            a, b = e.args
            ca = member_cluster.get(a, set()) | joined.get(a, set())
            cb = member_cluster.get(b, set()) | joined.get(b, set())
            if not ca or not cb:
                problems.append(f"{e.kind} names unknown node {a if not ca else b}")
            elif not ca & cb:
                problems.append(f"{e.kind} {a}-{b} spans clusters")

    known = set(member_cluster) | set(joined)
    for s in scenario.sessions:
        for end in (s.src, s.dst):
            try:
                as_id = NodeId.parse(end)
            except ValueError:
                as_id = None
            if as_id in reserved:
                problems.append(f"session endpoint {end} is the {reserved[as_id]}, not a sensor node")
            elif end not in known:
                problems.append(f"session endpoint {end} is not a node")
        if s.src == s.dst:
            problems.append(f"session {s.src}->{s.dst} has identical endpoints")
    return problems


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if value is None:
        return "none"
    return repr(value)


def format_scenario(scenario: Scenario) -> str:
    """Canonical text; parsing it back yields an equal Scenario."""
    out = [f"seed {scenario.seed}", f"mode {scenario.mode}",
           f"router {scenario.router_id}", f"controller {scenario.controller_id}",
           f"clusterhead {scenario.cluster_head_id}"]
    for cls, obj, word in ((EnergyModel, scenario.energy, "energy"), (ScheduleConfig, scenario.schedule, "schedule")):
        default = cls()
        for f in fields(cls):
            value = getattr(obj, f.name)
            if value != getattr(default, f.name):
                out.append(f"{word} {f.name} {_fmt(value)}")
    for c in scenario.clusters:
        out.append(f"cluster {c.number}")
        for n in c.nodes:
            line = f"node {n.label} {n.node_id if n.node_id is not None else 'auto'}"
            if n.position is not None:
                line += f" at {n.position.x!r} {n.position.y!r} {n.position.range!r}"
            out.append(line)
        out += [f"edge {a} {b}" for a, b in c.edges]
        out += [f"order {owner} {' '.join(order)}" for owner, order in c.orders]
    out += [f"session {s.time!r} {s.src} {s.dst}" for s in scenario.sessions]
    out += [f"event {e.time!r} {e.kind} {' '.join(e.args)}" for e in scenario.events]
    return "\n".join(out) + "\n"


def bundled_scenarios() -> list[str]:
    folder = resources.files("wsnsched") / "scenarios"
    return sorted(p.name for p in folder.iterdir() if p.name.endswith(".scn"))


def read_scenario_text(path) -> str:
    """Read a scenario file; bare names of bundled scenarios also resolve."""
    p = Path(path)
    if p.exists():
        return p.read_text(encoding="utf-8")
    bundled = resources.files("wsnsched") / "scenarios" / p.name
    if bundled.is_file():
        return bundled.read_text(encoding="utf-8")
    raise FileNotFoundError(path)


def load_scenario(path, validate: bool = True) -> Scenario:
    return parse_scenario(read_scenario_text(path), validate=validate)
