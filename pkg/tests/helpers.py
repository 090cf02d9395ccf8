"""Shared test helpers: random connected topologies and the setup pipeline."""

import numpy as np

from wsnsched.control_plane import (
    build_adjacency_matrix,
    converge_cast,
    derive_complete_info,
    forward_to_controller,
)
from wsnsched.topology import ClusterTopology, Node, NodeId, discover_neighbors, link

ASSIGNABLE = [NodeId(v) for v in range(16) if v not in (8, 9)]


def random_topology(rng: np.random.Generator, max_nodes: int = 8, cluster: int = 1) -> ClusterTopology:
    """Spanning tree plus random extra edges, so the graph is always connected."""
    n = int(rng.integers(1, max_nodes + 1))
    ids = [ASSIGNABLE[i] for i in sorted(rng.choice(len(ASSIGNABLE), size=n, replace=False))]
    nodes = [Node(f"n{i.value}", i) for i in ids]
    order = list(rng.permutation(n))
    links = set()
    for k in range(1, n):
        a = ids[order[k]]
        b = ids[order[int(rng.integers(0, k))]]
        links.add(link(a, b))
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < 0.3:
                links.add(link(ids[i], ids[j]))
    return ClusterTopology.build(cluster, nodes, links)


def complete_info(topo):
    ct = forward_to_controller([converge_cast(topo, discover_neighbors(topo))])
    return derive_complete_info(build_adjacency_matrix(ct, topo.cluster_number), ct)
