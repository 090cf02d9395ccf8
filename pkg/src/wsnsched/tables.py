"""Plain-text dumps of every table the control plane and the cluster head build."""

from __future__ import annotations

from .control_plane import AdjacencyMatrix, CompleteInfoTable, ControllerTable, RouterTable
from .dynamics import ClusterHeadTable

EMPTY = "-"


def _ids(ids) -> str:
    return ",".join(str(i) for i in ids) or EMPTY


def _nums(values) -> str:
    return ",".join(str(v) for v in values) or EMPTY


def align(rows: list[list[str]]) -> list[str]:
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    return ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in rows]


def format_id_assignment(topology) -> list[str]:
    current = topology.cluster_head_id if topology.cluster_head_id is not None else topology.router_id
    head = ["cluster", "node", "id", "current_dst", "final_dst"]
    rows = [[str(topology.cluster_number), n.label, str(n.node_id), str(current), str(topology.controller_id)]
            for n in sorted(topology.nodes, key=lambda n: n.node_id)]
    return [f"initial ids, cluster {topology.cluster_number}"] + align([head] + rows)


def format_router_table(table: RouterTable, relay: str = "router") -> list[str]:
    head = ["cluster", "node", "id", "neighbors", "depth", "current_dst", "final_dst"]
    rows = [[str(r.cluster_number), r.node_label, str(r.node_id), _ids(r.neighbor_ids), _nums(r.depths),
             str(r.current_destination), str(r.final_destination)] for r in table.reports]
    return [f"{relay} table, cluster {table.cluster_number}"] + align([head] + rows)


def format_controller_table(table: ControllerTable) -> list[str]:
    head = ["cluster", "node", "id", "neighbors", "source", "destination"]
    rows = [[str(r.cluster_number), r.node_label, str(r.node_id), _ids(r.neighbor_ids),
             str(r.source_id), str(r.destination_id)] for r in table.records]
    return ["controller table"] + align([head] + rows)


def format_adjacency(matrix: AdjacencyMatrix) -> list[str]:
    head = ["cluster", "node", "id", "|"] + [str(i) for i in matrix.ids]
    rows = [[str(matrix.cluster_number), label, str(node_id), "|"] + [str(int(c)) for c in matrix.cells[i]]
            for i, (node_id, label) in enumerate(zip(matrix.ids, matrix.labels))]
    return [f"adjacency matrix, cluster {matrix.cluster_number}"] + align([head] + rows)


def format_complete_info(table: CompleteInfoTable, title: str | None = None) -> list[str]:
    head = ["node", "id", "neighbors", "not_neighbors", "union", "destination", "cluster", "depth", "bit0"]
    rows = []
    for r in table.records:
        bit0 = r.bit0_list or getattr(table, "bit0_list", ())
        rows.append([r.node_label, str(r.node_id), _ids(r.neighbor_ids), _ids(r.not_neighbor_ids),
                     _ids(r.union_ids), str(r.destination), str(r.cluster_number), _nums(r.depths), _ids(bit0)])
    if not isinstance(table, ClusterHeadTable):
        head, rows = head[:-1], [r[:-1] for r in rows]
    title = title or f"complete node information, cluster {table.cluster_number}"
    return [title] + align([head] + rows)


def format_bit0(msg) -> list[str]:
    head = ["node", "id", "bit", "destination"]
    return ["bit 0 message"] + align([head, [msg.node_label, str(msg.node_id), str(msg.bit), str(msg.destination_id)]])


def format_reports(reports, cluster: int) -> list[str]:
    head = ["node", "id", "neighbors", "depth", "destination"]
    rows = [[r.node_label, str(r.node_id), _ids(r.neighbor_ids), _nums(r.depths), str(r.current_destination)]
            for r in reports]
    return [f"updated reports to the cluster head, cluster {cluster}"] + align([head] + rows)


def render_tables(result) -> str:
    """Every table of a finished run, in build order."""
    setup = result.setup
    blocks = []
    for topo in setup.topologies:
        blocks.append(format_id_assignment(topo))
    for topo, table in zip(setup.topologies, setup.router_tables):
        blocks.append(format_router_table(table, "head" if topo.cluster_head_id is not None else "router"))
    blocks.append(format_controller_table(setup.controller_table))
    for m in setup.matrices:
        blocks.append(format_adjacency(m))
    for info in setup.complete:
        blocks.append(format_complete_info(info))
    for head in setup.head_tables:
        blocks.append(format_complete_info(head, f"cluster head table, cluster {head.cluster_number}"))
    for snap in result.snapshots:
        if snap.message is not None:
            blocks.append(format_bit0(snap.message))
        if snap.reports:
            blocks.append(format_reports(snap.reports, snap.cluster))
        title = f"cluster head table, cluster {snap.cluster}, {snap.title}"
        blocks.append(format_complete_info(snap.table, title))
    return "\n\n".join("\n".join(b) for b in blocks) + "\n"


def emit_tables(scenario, seed: int | None = None) -> str:
    from .simulator import run

    return render_tables(run(scenario, seed))


def canonical(text: str) -> str:
    """Collapse runs of spaces so alignment changes do not matter."""
    return "\n".join(" ".join(line.split()) for line in text.strip().splitlines()) + "\n"
