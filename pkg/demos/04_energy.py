# %% [markdown]
# # Where the energy goes
#
# The ledger integrates the radio state over simulated time. The closed-form
# session equations are printed next to it as a cross-check.

# %%
import numpy as np

from wsnsched import EnergyModel, load_scenario, run
from wsnsched.energy import StateIndicators, state_slot_cost
from wsnsched.simulator import format_summary

model = EnergyModel()
for state in ("transmit", "receive", "listen", "sleep"):
    print(f"{state:9s} {state_slot_cost(StateIndicators.of(state), model):10.4f} mJ per 1 s slot")

# %%
result = run(load_scenario("figure1.scn"))
print(format_summary(result.summary))

# %% Listening dominates; compare each sleeper's nap with staying awake.
for node, _, duration in result.summary.sessions[0].sleepers:
    asleep = model.p_slp / 1000 * duration / 1000
    awake = model.p_lst * duration / 1000
    print(f"{node}: {asleep:.6f} mJ asleep vs {awake:.3f} mJ listening ({asleep / awake:.1%})")

# %% Idle energy per node of cluster 1 as an array.
labels = list("ABCDEF")
idle = np.array([result.summary.energy[(1, n)]["listen"] for n in labels])
print({n: round(float(v), 3) for n, v in zip(labels, idle)})
