from pathlib import Path

import pytest
from hypothesis import given, strategies as st

from oracles import smallest_refill
from penaltysim.adversary import execute, follow_honest
from penaltysim.protocols import (ProtocolVariant, UnknownParty, UnsupportedArity, build,
                                  call_count, chain_members, max_deposit, minimal_refill_factor,
                                  round_count)
from penaltysim.settlement import SecretShare, TokenConjunction, WitnessW

GOLDEN = Path(__file__).parent / "golden"

COMPLETE = [("BK2", 2), ("BKn", 3), ("BKn", 5), ("Ours", 3), ("Ours", 5), ("OursEquiv", 4),
            ("OursEquiv", 6), ("OursReduced(1)", 6), ("OursReduced(1)", 8),
            ("OursReduced(2)", 8)]


def coeffs(g):
    return [s.coeff for s in g.specs]


def test_ours_n4_amounts():
    g = build("Ours", 4, 1)
    assert coeffs(g) == [1, 1, 1, 3, 3, 3, 2, 2]


def test_bkn_n4_amounts():
    g = build("BKn", 4, 1)
    assert coeffs(g) == [1, 1, 1, 3, 2, 1]
    assert [s.claim_predicate.indices for s in g.specs][3:] == [(1, 2, 3), (1, 2), (1,)]


def test_ours_equiv_n5_records():
    g = build("OursEquiv", 5, 1)
    assert len(g.specs) == 14 == 4 * 5 - 6
    assert sum(s.is_crg for s in g.specs) == 3


def test_amounts_scale_with_q():
    assert [s.amount for s in build("Ours", 4, 7).specs] == [7 * c for c in coeffs(build("Ours", 4, 1))]


@pytest.mark.parametrize("n", range(3, 11))
def test_table_counts(n):
    ours, bkn = build("Ours", n, 1), build("BKn", n, 1)
    assert (round_count(ours), call_count(ours)) == (8, 3 * n - 4)
    assert (round_count(bkn), call_count(bkn)) == (2 * n, 2 * n - 2)


def test_reduced_counts_n8():
    g = build("OursReduced(1)", 8, 1)
    assert round_count(g) == 10
    # one to-aggregator deposit per chain, so 5n/2 - 3
    assert call_count(g) == 17


@pytest.mark.parametrize("n", range(3, 11))
def test_max_deposits(n):
    assert max_deposit(build("Ours", n, 1), n - 1) == (n - 1) * (n - 2) + 1
    assert max_deposit(build("BKn", n, 1), n) == n - 1


@pytest.mark.parametrize("n", [6, 8, 10, 12])
def test_reduced_max_deposit(n):
    assert max_deposit(build("OursReduced(1)", n, 1), n - 1) == (n - 1) * (n - 2) // 2 + 1


def test_max_deposit_unknown_party():
    with pytest.raises(UnknownParty):
        max_deposit(build("Ours", 4, 1), 5)


def test_refill_examples():
    assert minimal_refill_factor(5) == 3
    assert minimal_refill_factor(3) == 1
    assert minimal_refill_factor(10) == 8
    with pytest.raises(ValueError):
        minimal_refill_factor(2)


@pytest.mark.parametrize("n", range(3, 21))
def test_refill_scan(n):
    assert minimal_refill_factor(n) == smallest_refill(n) == n - 2


@pytest.mark.parametrize("variant,n", [("Naive2", 3), ("BK2", 3), ("Ours", 2), ("BKn", 2),
                                       ("OursEquiv", 2), ("OursReduced(1)", 5),
                                       ("OursReduced(1)", 4), ("OursReduced(2)", 6)])
def test_unsupported_arity(variant, n):
    with pytest.raises(UnsupportedArity):
        build(variant, n, 1)


def test_variant_parse():
    assert ProtocolVariant.parse("OursReduced(l=2)") == ProtocolVariant("OursReduced", 2)
    assert ProtocolVariant.parse("Ours") == ProtocolVariant("Ours", 1)
    assert str(ProtocolVariant.parse("OursReduced(1)")) == "OursReduced(1)"
    for bad in ("Nope", "Ours(", "OursReduced(0)"):
        with pytest.raises(ValueError):
            ProtocolVariant.parse(bad)


def test_chain_pairing():
    assert chain_members(6, 1) == [[1, 4], [2, 3]]
    assert chain_members(8, 1) == [[1, 6], [2, 5], [3, 4]]
    assert chain_members(8, 2) == [[1, 4, 5], [2, 3, 6]]


@pytest.mark.parametrize("name,variant,n", [
    ("Ours_n4", "Ours", 4), ("BKn_n4", "BKn", 4), ("OursEquiv_n5", "OursEquiv", 5),
    ("OursReduced1_n6", "OursReduced(1)", 6), ("MergedTau34_n4", "MergedTau34", 4),
    ("Naive2_n2", "Naive2", 2)])
def test_golden_listing(name, variant, n):
    assert build(variant, n, 1).listing() == (GOLDEN / f"{name}.txt").read_text()


@pytest.mark.parametrize("variant,n", COMPLETE)
def test_reverse_claim_order(variant, n):
    g = build(variant, n, 1)
    latest = [max(g.spec(i).claim_deadline for i in grp) for grp in g.deposit_rounds]
    assert all(a > b for a, b in zip(latest, latest[1:]))
    assert min(s.claim_deadline for s in g.specs) > len(g.deposit_rounds)


@pytest.mark.parametrize("variant,n", COMPLETE)
def test_final_predicates_cover_every_token(variant, n):
    g = build(variant, n, 1)
    last = max(s.claim_deadline for s in g.specs)
    union = set()
    for s in g.specs:
        if s.claim_deadline == last:
            union |= set(s.claim_predicate.indices)
    assert union == set(range(1, n + 1))


@pytest.mark.parametrize("variant,n", COMPLETE)
def test_honest_run_resolves_everything(variant, n):
    g = build(variant, n, 1)
    out = execute(g, follow_honest())
    assert all(v == 0 for v in out.net_balances.values())
    kinds = {}
    for ev in out.trace:
        kinds.setdefault(ev.kind.value, set()).add(ev.ssid)
    assert len(kinds["deposit"]) == len(g.specs)
    # nobody but their sender knows w, so the extra deposits come back to it
    extra = {s.ssid for s in g.specs if s.role == "extra"}
    assert kinds["claim"] == {s.ssid for s in g.specs} - extra
    assert kinds.get("auto_refund", set()) == extra


@pytest.mark.parametrize("n", [4, 5, 6])
def test_equiv_structure(n):
    g = build("OursEquiv", n, 1)
    step3 = [s for s in g.specs if s.role == "step3"]
    extra = [s for s in g.specs if s.role == "extra"]
    assert len(step3) == len(extra) == n - 2
    for s in step3:
        assert s.refund_predicate == SecretShare(s.receiver)
        assert s.claim_predicate == TokenConjunction((n - 1, s.receiver))
        assert s.refund_deadline > s.claim_deadline
    for s in extra:
        assert s.claim_predicate == WitnessW() and s.sender == n - 1
        assert s.claim_deadline > step3[0].refund_deadline
    assert {s.deposit_round for s in step3 + extra} == {step3[0].deposit_round}


def test_merged_tau34_shares_last_deadline():
    g = build("MergedTau34", 4, 1)
    assert {s.claim_deadline for s in g.specs if s.role in ("step1", "step2")} == {g.labels["τ3"]}


@given(st.sampled_from(["BKn", "Ours", "OursEquiv", "MergedTau34"]), st.integers(3, 12),
       st.integers(1, 5))
def test_structure_properties(variant, n, q):
    g = build(variant, n, q)
    assert [s.index for s in g.specs] == list(range(1, len(g.specs) + 1))
    assert sorted(i for grp in g.deposit_rounds for i in grp) == list(range(1, len(g.specs) + 1))
    for s in g.specs:
        assert s.amount == s.coeff * q and s.sender != s.receiver
        assert s.claim_deadline == g.labels[s.claim_label]
    assert sum(max_deposit(g, p) for p in range(1, n + 1)) == sum(s.amount for s in g.specs)
    assert g.initial_wallets() == {p: max_deposit(g, p) for p in range(1, n + 1)}
