import itertools

import pytest
from hypothesis import given, settings, strategies as st

from oracles import aggregator_net
from penaltysim.adversary import (NAMED_SCHEDULES, Action, AdversarySchedule, FullCorruption,
                                  MalformedSchedule, default_dealer, enumerate_outcomes,
                                  enumerate_schedules, equiv_double_refund, execute, fig3_abort,
                                  follow_honest, middle_abort, named_schedule, naive2_steal,
                                  remark1, remark2)
from penaltysim.engine import triggered
from penaltysim.protocols import build
from penaltysim.settlement import EventKind


def balances(out):
    return [out.net_balances[p] for p in sorted(out.net_balances)]


def test_fig3_balances():
    g = build("Ours", 4, 1)
    out = execute(g, fig3_abort(g))
    assert balances(out) == [-2, 1, 1, 0]
    assert sum(balances(out)) == 0 and out.supply_ok


def test_fig3_refund_after_step3_deadline():
    g = build("Ours", 4, 1)
    out = execute(g, fig3_abort(g))
    t2 = g.labels["τ2"]
    to_p1 = next(s for s in g.specs if s.role == "step3" and s.receiver == 1)
    ev = [e for e in out.trace if e.ssid == to_p1.ssid and e.kind is EventKind.AUTO_REFUND]
    assert [e.round for e in ev] == [t2 + 1]


def test_fig3_scales_with_q():
    g = build("Ours", 4, 5)
    assert balances(execute(g, fig3_abort(g))) == [-10, 5, 5, 0]


def test_honest_run_everyone_learns():
    g = build("Ours", 5, 1)
    out = execute(g, follow_honest())
    assert set(out.net_balances.values()) == {0}
    assert out.learned.adversary_learned
    assert all(out.learned.honest_learned.values())


def test_naive2_steal():
    g = build("Naive2", 2, 1)
    out = execute(g, naive2_steal(g))
    assert out.net_balances[1] == -1


@pytest.mark.parametrize("n", [4, 5])
def test_remark2_loss(n):
    g = build("MergedTau34", n, 1)
    out = execute(g, remark2(g))
    assert out.net_balances[n] == -(n - 1)


def test_remark1_balances():
    g = build("Ours", 5, 1)
    out = execute(g, remark1(g))
    assert out.net_balances == {1: -3, 2: -3, 3: 1, 4: aggregator_net(5, 2, 1), 5: 0}
    assert out.net_balances[4] == 5


@pytest.mark.parametrize("n,x", [(n, x) for n in (4, 5, 6) for x in range(1, n - 1)])
def test_middle_abort_against_replay(n, x):
    g = build("Ours", n, 1)
    out = execute(g, middle_abort(g, range(1, x + 1)))
    assert out.net_balances[n - 1] == aggregator_net(n, x, 1)
    for p in range(x + 1, n - 1):
        assert out.net_balances[p] == 1


def test_equiv_single_refund_then_give():
    g = build("OursEquiv", 5, 1)
    out = execute(g, remark1(g))
    assert out.step3_refunds == 1
    gives = [e for e in out.trace if e.kind is EventKind.GIVE]
    assert len(gives) == 1 and gives[0].amount == 4
    for p in out.honest:
        assert out.net_balances[p] == 1


def test_equiv_double_refund_pays_nq():
    g = build("OursEquiv", 5, 1)
    out = execute(g, equiv_double_refund(g))
    assert out.step3_refunds == 2
    assert out.net_balances[3] == 5


def test_schedule_validation():
    g = build("Ours", 4, 1)
    with pytest.raises(MalformedSchedule):
        execute(g, AdversarySchedule({1}, {("claim", 7): Action.WITHHOLD}))  # P3 receives tx7
    with pytest.raises(MalformedSchedule):
        execute(g, AdversarySchedule({1}, {("deposit", 1): Action.WITHHOLD}))
    with pytest.raises(MalformedSchedule):
        execute(g, AdversarySchedule({1}, {("refund", 1): Action.REFUND_WITH}))
    with pytest.raises(MalformedSchedule):
        execute(g, AdversarySchedule({1, 2, 3, 4}, {}))
    with pytest.raises(MalformedSchedule):
        execute(g, AdversarySchedule({9}, {}))
    with pytest.raises(MalformedSchedule):
        named_schedule("nope", g)


def test_schedule_roundtrip():
    g = build("OursEquiv", 5, 1)
    s = equiv_double_refund(g)
    assert AdversarySchedule.from_dict(s.to_dict()) == s


def test_named_schedules_run():
    for name, variant, n in [("follow_honest", "Ours", 4), ("fig3_abort", "Ours", 4),
                             ("remark1", "Ours", 5), ("remark2", "MergedTau34", 4),
                             ("naive2_steal", "Naive2", 2),
                             ("equiv_double_refund", "OursEquiv", 5)]:
        assert name in NAMED_SCHEDULES
        g = build(variant, n, 1)
        assert execute(g, named_schedule(name, g)).supply_ok


def test_execute_is_deterministic():
    g = build("OursEquiv", 5, 1)
    a = execute(g, equiv_double_refund(g), default_dealer(g, 3))
    b = execute(g, equiv_double_refund(g), default_dealer(g, 3))
    assert a.trace_lines() == b.trace_lines() and a.net_balances == b.net_balances
    c = execute(g, equiv_double_refund(g), default_dealer(g, 4))
    assert c.net_balances == a.net_balances


def test_enumerate_n3_last_party():
    g = build("Ours", 3, 1)
    scheds = list(enumerate_schedules(g, {3}))
    assert len(scheds) <= 2 ** 2 * 3 ** 2
    acts = [s.actions for s in scheds]
    assert {} in acts
    assert {("claim", 1): Action.WITHHOLD, ("claim", 2): Action.WITHHOLD} in acts


def test_enumerate_empty_set():
    g = build("Ours", 4, 1)
    assert list(enumerate_schedules(g, set())) == [follow_honest()]


def test_enumerate_contains_fig3():
    g = build("Ours", 4, 1)
    outs = {tuple(balances(o)) for o in enumerate_outcomes(g, {1, 4})}
    assert (-2, 1, 1, 0) in outs


def test_enumerate_full_corruption():
    g = build("Ours", 3, 1)
    with pytest.raises(FullCorruption):
        list(enumerate_schedules(g, {1, 2, 3}))


@pytest.mark.parametrize("variant,n", [("Ours", 4), ("OursEquiv", 4), ("BKn", 4),
                                       ("Naive2", 2), ("MergedTau34", 4)])
def test_enumerated_schedules_replay(variant, n):
    # each schedule, re-executed from scratch, reproduces the outcome the
    # search reported for it
    g = build(variant, n, 1)
    d = default_dealer(g)
    for k in range(0, n):
        for c in itertools.combinations(range(1, n + 1), k):
            outs = list(enumerate_outcomes(g, c, d))
            scheds = {repr(sorted(o.schedule.actions.items())) for o in outs}
            assert len(scheds) == len(outs)
            for o in outs:
                again = execute(g, o.schedule, d)
                assert again.net_balances == o.net_balances
                assert again.learned == o.learned
                assert again.trace_lines() == o.trace_lines()


def test_follow_honest_always_enumerated():
    g = build("OursEquiv", 4, 1)
    for k in range(1, 4):
        for c in itertools.combinations(range(1, 5), k):
            assert any(not s.actions for s in enumerate_schedules(g, c))


def _honest_view(g, c, merge):
    out = set()
    for o in enumerate_outcomes(g, c, merge=merge):
        out.add((tuple(sorted((p, b) for p, b in o.net_balances.items() if p not in c)),
                 triggered(o)))
    return out


@pytest.mark.parametrize("variant,n", [("Ours", 4), ("OursEquiv", 4), ("BKn", 4),
                                       ("OursReduced(1)", 6)])
def test_merging_keeps_every_honest_outcome(variant, n):
    # the reduced search against the plain one that only merges identical ledgers
    g = build(variant, n, 1)
    for k in range(1, n):
        for c in itertools.combinations(range(1, n + 1), k):
            if variant == "OursReduced(1)" and k > 2:
                continue
            assert _honest_view(g, c, "honest") == _honest_view(g, c, "state")


def test_coalition_merge_keeps_aggregator_futures():
    g = build("OursEquiv", 4, 1)
    for c in [(3,), (1, 3), (2, 3, 4), (1, 3, 4)]:
        full = {o.net_balances[3] for o in enumerate_outcomes(g, c, merge="state")}
        coal = {o.net_balances[3] for o in enumerate_outcomes(g, c, merge="coalition")}
        assert max(coal) == max(full)


def test_unknown_merge_mode():
    g = build("Ours", 3, 1)
    with pytest.raises(ValueError):
        list(enumerate_outcomes(g, {1}, merge="bogus"))


@settings(max_examples=40)
@given(st.data())
def test_random_schedules_conserve(data):
    variant, n = data.draw(st.sampled_from([("Ours", 4), ("OursEquiv", 5), ("BKn", 4),
                                            ("OursReduced(1)", 6), ("MergedTau34", 4)]))
    g = build(variant, n, 1)
    c = data.draw(st.sets(st.integers(1, n), max_size=n - 1))
    acts = {}
    for s in g.specs:
        if s.sender in c:
            acts[("deposit", s.index)] = data.draw(st.sampled_from(
                [Action.FOLLOW_HONEST, Action.DEPOSIT_SKIP]))
            if s.is_crg:
                acts[("refund", s.index)] = data.draw(st.sampled_from(
                    [Action.FOLLOW_HONEST, Action.REFUND_WITH, Action.FORGO]))
        if s.receiver in c:
            acts[("claim", s.index)] = data.draw(st.sampled_from(
                [Action.FOLLOW_HONEST, Action.CLAIM_NOW, Action.WITHHOLD]))
    out = execute(g, AdversarySchedule(frozenset(c), acts))
    assert out.supply_ok and sum(out.net_balances.values()) == 0
    assert out.rounds_used <= g.horizon
    assert out.calls_used == sum(e.kind is EventKind.DEPOSIT for e in out.trace)
    resolved = [e.ssid for e in out.trace if e.kind is not EventKind.DEPOSIT]
    assert len(resolved) == len(set(resolved)) == out.calls_used
