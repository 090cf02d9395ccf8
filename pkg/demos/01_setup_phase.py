# %% [markdown]
# # Setup phase on the two-cluster network
#
# Every node gossips with its neighbors, reports to the router, and the
# controller turns the reports into adjacency matrices and complete node
# information that is broadcast back down.

# %%
from wsnsched import load_scenario
from wsnsched.control_plane import build_adjacency_matrix, converge_cast, derive_complete_info, forward_to_controller
from wsnsched.tables import format_adjacency, format_complete_info, format_router_table
from wsnsched.topology import discover_neighbors

scenario = load_scenario("figure1.scn")
cluster1, cluster2 = scenario.topologies()

# %% Gossip runs lowest ID first.
for entry in discover_neighbors(cluster1):
    print(entry.label, entry.node_id, [str(n) for n in entry.neighbors], entry.depths)

# %% Converge-cast to the router, then forward cluster by cluster.
router_tables = [converge_cast(t, discover_neighbors(t)) for t in (cluster1, cluster2)]
print("\n".join(format_router_table(router_tables[1])))
controller = forward_to_controller(router_tables)

# %% The adjacency matrix is a plain numpy array.
matrix = build_adjacency_matrix(controller, 1)
print("\n".join(format_adjacency(matrix)))
print("degrees:", matrix.degree().tolist())
print("symmetric:", bool((matrix.cells == matrix.cells.T).all()))

# %% A node counts itself as a not-neighbor, so every union is the whole cluster.
info = derive_complete_info(matrix, controller)
print("\n".join(format_complete_info(info)))
