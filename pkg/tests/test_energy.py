import pytest
from hypothesis import given, strategies as st

from wsnsched.energy import (
    BUCKETS,
    EnergyLedger,
    EnergyModel,
    KTooLarge,
    MultipleStates,
    NegativeDuration,
    StateIndicators,
    join_session_power,
    leave_session_power,
    proposed_slot_cost,
    state_slot_cost,
    static_session_power,
)

counts = st.integers(0, 50)
models = st.builds(EnergyModel, **{k: st.floats(0, 100) for k in EnergyModel.keys()})


def test_state_costs_at_defaults():
    assert state_slot_cost(StateIndicators.of("transmit")) == pytest.approx(60.0)
    assert state_slot_cost(StateIndicators.of("sleep")) == pytest.approx(0.09)
    assert state_slot_cost(StateIndicators()) == 0


def test_sleep_is_far_below_listening():
    m = EnergyModel()
    assert m.p_slp / 1000 < m.p_lst / 100
    listen = state_slot_cost(StateIndicators.of("listen"), m)
    sleep = state_slot_cost(StateIndicators.of("sleep"), m)
    assert listen / sleep == pytest.approx(500.0)


def test_multiple_states_rejected():
    with pytest.raises(MultipleStates):
        state_slot_cost(StateIndicators(x_s=1, x_l=1))


def test_proposed_slot_cost():
    m = EnergyModel()
    sender = StateIndicators.of("transmit")
    assert proposed_slot_cost(0, sender, m) == pytest.approx(60.0)
    # hop A->F: F receiving, B listening before it sleeps
    receive = StateIndicators.of("receive")
    two = proposed_slot_cost(2, sender, m, receive)
    one = proposed_slot_cost(1, sender, m, receive)
    assert two - one == pytest.approx(45.0 + 2.0)
    with pytest.raises(ValueError):
        proposed_slot_cost(-1, sender, m)


def test_static_session_examples():
    assert static_session_power(4) == 20
    assert static_session_power(0) == 0
    with pytest.raises(KTooLarge):
        static_session_power(6, cluster_size=6)


def test_leave_and_join_examples():
    assert leave_session_power(4, 1, 5) == 28
    assert leave_session_power(0, 2, 0) == 4
    assert join_session_power(4, 1, 1) == 24
    assert join_session_power(0, 3, 3) == 8


@given(counts, models)
def test_reductions_to_static(k, m):
    m = m.with_overrides(e_transCH=0.0, e_rcvCH=0.0)
    assert leave_session_power(k, 0, 0, m) == pytest.approx(static_session_power(k, m))
    assert join_session_power(k, 0, 0, m) == pytest.approx(static_session_power(k, m))


@given(counts, counts, counts, models)
def test_monotonic_in_every_count(k, a, b, m):
    assert static_session_power(k + 1, m) >= static_session_power(k, m)
    for f in (leave_session_power, join_session_power):
        base = f(k, a, b, m)
        assert f(k + 1, a, b, m) >= base
        assert f(k, a + 1, b, m) >= base
        assert f(k, a, b + 1, m) >= base


def test_ledger_charges():
    ledger = EnergyLedger()
    assert ledger.charge("A", "transmit", 10) == pytest.approx(0.6)
    assert ledger.charge("A", "sleep", 6) == pytest.approx(0.00054)
    assert ledger.charge("A", "listen", 0) == 0
    assert ledger.charge_event("A", "e_rts") == 1.0
    buckets = ledger.buckets("A")
    assert set(buckets) == set(BUCKETS)
    assert ledger.total("A") == pytest.approx(sum(buckets.values()))
    with pytest.raises(NegativeDuration):
        ledger.charge("A", "listen", -1)


@given(st.lists(st.tuples(st.sampled_from(["transmit", "receive", "listen", "sleep"]),
                          st.floats(0, 1000)), max_size=30))
def test_ledger_is_conservative_and_monotone(events):
    ledger = EnergyLedger()
    ledger.register("n")
    last = 0.0
    for state, duration in events:
        ledger.charge("n", state, duration)
        total = ledger.total("n")
        assert total >= last
        last = total
    assert ledger.total("n") == pytest.approx(sum(ledger.buckets("n").values()))


def test_model_rejects_negative_values():
    with pytest.raises(ValueError):
        EnergyModel(p_tx=-1)
