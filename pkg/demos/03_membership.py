# %% [markdown]
# # Leaving and joining with a cluster head
#
# In dynamic mode an always-awake cluster head listens for one extra slot at
# the end of every round. Departures (bit 0) and newcomers are handled there.

# %%
from wsnsched import load_scenario, run
from wsnsched.tables import format_complete_info

leave = run(load_scenario("figure1_leave.scn"))
for snap in leave.snapshots:
    print(f"t={snap.time} ms, {snap.title}")
    print("\n".join(format_complete_info(snap.table)))

# %% G moves from cluster 2 into cluster 1, next to B.
join = run(load_scenario("figure1_join.scn"))
for m in join.summary.membership:
    print(m.kind, m.label, "cluster", m.cluster, "at", m.time, "ms")
print("\n".join(format_complete_info(join.snapshots[-1].table)))

# %% The newcomer gets a slot like everyone else.
print(join.summary.sessions[0].path)
