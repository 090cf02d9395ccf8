# %% [markdown]
# # One session, A to D
#
# A holds the fourth slot of round 0 (B, F, E, A, D, C). Each hop picks the
# shallowest neighbor, and after cts the sender's other neighbors go to sleep.

# %%
from wsnsched import load_scenario, run
from wsnsched.trace import format_record

result = run(load_scenario("figure1.scn"))
(session,) = result.summary.sessions
print("path:", "-".join(session.path), "delivered:", session.delivered)
for node, start, duration in session.sleepers:
    print(f"  {node} sleeps at {start:.1f} ms for {duration:g} ms")

# %% The session part of the trace, without idle-listening bookkeeping.
for record in result.trace:
    if 60.0 <= record.time_ms < 80.0 and record.kind != "listen":
        print(format_record(record))

# %% [markdown]
# With A-F down the rts times out and A tries its deepest neighbor instead.

# %%
fallback = run(load_scenario("figure1_linkfail.scn")).summary.sessions[0]
print("with A-F failed:", "-".join(fallback.path))
aborted = run(load_scenario("figure1_linkfail_both.scn")).summary.sessions[0]
print("with A-F and A-B failed:", aborted.reason)
