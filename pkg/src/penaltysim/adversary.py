"""Adversary schedules, deterministic replay and exhaustive enumeration.

The coalition acts after the honest parties in every round and sees what they
published in that round; honest parties only use what was public in earlier
rounds. Every corrupted decision has a fixed round, so a schedule is just a
mapping from decision to action.

Decisions are keyed ``(kind, spec_index)``:

* ``("deposit", i)``: corrupted sender of spec i, in its deposit round;
* ``("claim", i)``: corrupted receiver of spec i, at its claim deadline;
* ``("refund", i)``: corrupted sender of CRG spec i, at its refund deadline.

Keys absent from ``actions`` mean FOLLOW_HONEST.

Honest behaviour:

* deposit when every earlier deposit group is complete;
* claim at the deadline round when the witness can be built from the own
  token and earlier public data, provided the deposit phase completed or one
  of the party's own deposits has already been claimed;
* as CRG sender, refund at most one unclaimed deposit (the lowest index) so
  that the refund secret stays hidden.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Optional

from .protocols import DepositGraph, DepositSpec
from .pubnmss import DealerOutput, WOpening, deal_output, reconstruct_w_opening
from .settlement import (Ledger, LedgerEvent, SecretShare, Status, TokenConjunction,
                         WitnessW)

DEFAULT_SECRET = b"fair-reconstruct"


class FullCorruption(ValueError):
    pass


class MalformedSchedule(ValueError):
    pass


class Action(enum.Enum):
    FOLLOW_HONEST = "follow"
    DEPOSIT_MAKE = "make"
    DEPOSIT_SKIP = "skip"
    CLAIM_NOW = "claim"
    WITHHOLD = "withhold"
    REFUND_WITH = "refund"
    FORGO = "forgo"


_ALLOWED = {
    "deposit": {Action.FOLLOW_HONEST, Action.DEPOSIT_MAKE, Action.DEPOSIT_SKIP},
    "claim": {Action.FOLLOW_HONEST, Action.CLAIM_NOW, Action.WITHHOLD},
    "refund": {Action.FOLLOW_HONEST, Action.REFUND_WITH, Action.FORGO},
}


@dataclass(frozen=True)
class AdversarySchedule:
    corrupted: frozenset
    actions: Mapping = field(default_factory=dict, hash=False)
    name: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "corrupted", frozenset(self.corrupted))
        clean = {k: v for k, v in dict(self.actions).items() if v is not Action.FOLLOW_HONEST}
        object.__setattr__(self, "actions", dict(sorted(clean.items())))

    def action(self, kind: str, index: int) -> Action:
        return self.actions.get((kind, index), Action.FOLLOW_HONEST)

    def validate(self, graph: DepositGraph) -> None:
        if not all(1 <= p <= graph.n for p in self.corrupted):
            raise MalformedSchedule("corrupted party outside 1..n")
        if len(self.corrupted) >= graph.n:
            raise MalformedSchedule("every party corrupted")
        for (kind, idx), act in self.actions.items():
            if kind not in _ALLOWED or act not in _ALLOWED[kind]:
                raise MalformedSchedule(f"{act} is not a {kind} action")
            if not 1 <= idx <= len(graph.specs):
                raise MalformedSchedule(f"no spec {idx}")
            s = graph.spec(idx)
            owner = s.receiver if kind == "claim" else s.sender
            if owner not in self.corrupted:
                raise MalformedSchedule(f"{kind} on spec {idx} is not controlled by the coalition")
            if kind == "refund" and not s.is_crg:
                raise MalformedSchedule(f"spec {idx} has no refund branch")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "corrupted": sorted(self.corrupted),
            "actions": [[k, i, a.value] for (k, i), a in self.actions.items()],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AdversarySchedule":
        acts = {(k, int(i)): Action(a) for k, i, a in d.get("actions", [])}
        return cls(frozenset(d.get("corrupted", ())), acts, d.get("name"))


def follow_honest(corrupted=()) -> AdversarySchedule:
    return AdversarySchedule(frozenset(corrupted), {}, "follow_honest")


@dataclass(frozen=True)
class LearnedOutputFlag:
    adversary_learned: bool
    honest_learned: Mapping


@dataclass
class ExecutionOutcome:
    net_balances: dict
    learned: LearnedOutputFlag
    rounds_used: int
    calls_used: int
    trace: list
    corrupted: frozenset
    supply_ok: bool
    step3_refunds: int = 0
    w_claims: int = 0
    schedule: Optional[AdversarySchedule] = None

    @property
    def honest(self) -> frozenset:
        return frozenset(p for p in self.net_balances if p not in self.corrupted)

    def trace_lines(self) -> list[str]:
        return [ev.to_json() for ev in self.trace]


# Round semantics ---------------------------------------------------------------

def _signature(s: DepositSpec) -> tuple:
    refund = (s.refund_predicate.describe(), s.refund_deadline) if s.is_crg else None
    return (s.claim_deadline, s.claim_predicate.describe(), refund)


_EMPTY = ((), (), ())


class _Run:
    """Mutable execution state shared by replay and enumeration."""

    __slots__ = ("graph", "dealer", "corrupted", "ledger", "supply_ok", "refunded_by", "static",
                 "plan", "woken", "w_claims", "info", "honest", "group_ssids")

    def __init__(self, graph, dealer, corrupted):
        self.graph = graph
        self.dealer = dealer
        self.corrupted = frozenset(corrupted)
        agg = graph.n - 1
        C = self.corrupted
        # per spec: (ssid, internal to the coalition, signature, aggregator endpoint)
        self.static = tuple((s.ssid, s.sender in C and s.receiver in C, _signature(s),
                             agg in (s.sender, s.receiver)) for s in graph.specs)
        # per round: deposits made, claims due, refunds due
        plan: dict = {}
        for s in graph.specs:
            plan.setdefault(s.deposit_round, ([], [], []))[0].append(s)
            plan.setdefault(s.claim_deadline, ([], [], []))[1].append(s)
            if s.is_crg:
                plan.setdefault(s.refund_deadline, ([], [], []))[2].append(s)
        self.plan = plan
        self.info = {s.ssid: (s.index - 1,) + self.static[s.index - 1][1:] + (s.is_crg,)
                     for s in graph.specs}
        self.honest = tuple(p for p in range(1, graph.n + 1) if p not in C)
        self.group_ssids = tuple(tuple(graph.spec(i).ssid for i in m) for m in graph.deposit_rounds)
        self.ledger = Ledger(graph.initial_wallets(), dealer.public())
        self.supply_ok = True
        self.refunded_by: dict[int, int] = {}
        self.woken: dict[int, int] = {}  # sender -> first round one of its deposits was claimed
        self.w_claims = 0

    def copy(self) -> "_Run":
        other = _Run.__new__(_Run)
        other.graph, other.dealer, other.corrupted = self.graph, self.dealer, self.corrupted
        other.static, other.plan = self.static, self.plan
        other.info, other.honest, other.group_ssids = self.info, self.honest, self.group_ssids
        other.woken = self.woken if not self.woken else dict(self.woken)
        other.w_claims = self.w_claims
        other.ledger = self.ledger.copy()
        other.supply_ok = self.supply_ok
        other.refunded_by = dict(self.refunded_by)
        return other

    def key(self) -> tuple:
        led = self.ledger
        return (tuple(led.wallets[p] for p in sorted(led.wallets)),
                tuple((k, r.status.value) for k, r in sorted(led.records.items())),
                frozenset(led.token_round), frozenset(led.share_round),
                led.w_round is not None, self.supply_ok)

    def honest_key(self, r: int, prune: bool = True) -> tuple:
        """Projection of the state in round r that fixes every honest future.

        Closed records only matter through balances and through which honest
        parties have had a deposit claimed (which wakes them up). Open
        coalition-internal records are kept only by signature (deadline,
        predicate, refund terms): which corrupted sender made one is
        irrelevant, except that the count matters where the aggregator is an
        endpoint. The aggregator's own balance is left out; the search keeps
        the richest aggregator among merged states instead (see rank).
        """
        led, g, C = self.ledger, self.graph, self.corrupted
        records = led.records
        agg = g.n - 1
        wallets = led.wallets
        bal = tuple(wallets[p] for p in self.honest)
        open_idx, present, counts = [], set(), {}
        info = self.info
        dead = self._dead_check(r) if prune else None
        for ssid, rec in records.items():
            if rec.status is not Status.OPEN:
                continue
            idx, internal, sig, at_agg, crg = info[ssid]
            if not internal:
                if dead is None or crg or rec.sender not in C or not dead(rec):
                    open_idx.append(idx)
            elif crg or rec.claim_deadline > r:
                if at_agg:
                    counts[sig] = counts.get(sig, 0) + 1
                else:
                    present.add(sig)
        open_idx.sort()
        extra = ()
        if agg in C:
            extra = (min(self.refunded_by.get(agg, 0), 2), self.w_claims)
        if r < len(g.deposit_rounds):
            groups = tuple(all(x in records for x in members) for members in self.group_ssids)
        else:
            groups = len(records) == len(g.specs)
        woken = frozenset(p for p in self.woken if p not in C)
        return (bal, tuple(open_idx), frozenset(present), tuple(sorted(counts.items())), extra,
                groups, woken, frozenset(led.token_round), frozenset(led.share_round),
                led.w_round is not None, self.supply_ok)

    def _dead_check(self, r: int):
        """Predicate for plain coalition deposits no honest receiver can ever claim.

        Only meaningful once the deposit phase can no longer complete: an
        honest receiver then claims only after being woken, which needs a
        deposit it sent to be claimed strictly before the record's deadline.
        Only groups of earlier rounds are inspected, since coalition deposits
        of the current round may still be pending. Returns None while the
        phase may still complete.
        """
        g, records = self.graph, self.ledger.records
        if len(records) == len(g.specs):
            return None
        broken = any(not all(x in records for x in members)
                     for members in self.group_ssids[:r - 1])
        if not broken:
            return None
        woken = self.woken
        wake: dict = {}
        for rec in records.values():
            if rec.status is Status.OPEN and rec.sender not in self.corrupted:
                t = wake.get(rec.sender)
                if t is None or rec.claim_deadline < t:
                    wake[rec.sender] = rec.claim_deadline

        def dead(rec) -> bool:
            t = rec.claim_deadline
            h = rec.receiver
            return woken.get(h, t) >= t and wake.get(h, t) >= t
        return dead

    def frozen(self, r: int) -> bool:
        """True when nothing can change honest balances or honest tokens any more.

        That holds once the deposit phase can no longer complete, no honest
        party has been woken by a claim on its deposit, and every record with
        an honest endpoint is a plain deposit to an honest receiver (which
        that passive receiver will never claim). The coalition can then only
        reveal more of its own tokens, which can only switch the learned
        trigger off.
        """
        g, C, led = self.graph, self.corrupted, self.ledger
        if r >= len(g.deposit_rounds) and len(led.records) == len(g.specs):
            return False
        if r < len(g.deposit_rounds) and self.groups_complete_before(r + 1):
            return False
        for rec in led.records.values():
            if rec.sender in C and rec.receiver in C:
                continue
            if rec.status is Status.OPEN:
                if rec.sender not in C or rec.is_crg:
                    return False
            elif rec.status is Status.CLAIMED and rec.sender not in C:
                return False
        return True

    def rank(self) -> int:
        agg = self.graph.n - 1
        return self.ledger.wallets[agg] if agg in self.corrupted else 0

    # knowledge

    def _record(self, spec: DepositSpec):
        return self.ledger.records.get(spec.ssid)

    def _w_known(self, tokens_round: int, strict: bool, party: Optional[int]) -> bool:
        led = self.ledger
        if led.w_visible(tokens_round, strict=strict):
            return True
        if len(led.visible_shares(tokens_round, strict=strict)) >= 2:
            return True
        agg = self.graph.n - 1
        holds_all = party == agg or (party is None and agg in self.corrupted)
        return holds_all and self.dealer.extras is not None and len(self.dealer.extras.shares) >= 2

    def _witness(self, pred, tokens: set, w_known: bool, shares_known: set):
        if isinstance(pred, TokenConjunction):
            if all(i in tokens for i in pred.indices):
                return {i: self.dealer.token(i) for i in pred.indices}
            return None
        if isinstance(pred, WitnessW):
            if not w_known:
                return None
            led = self.ledger
            if led.published_w is not None:
                return led.published_w
            if len(led.published_shares) >= 2:
                a, b = sorted(led.published_shares)[:2]
                ex = self.dealer.extras
                return reconstruct_w_opening([led.published_shares[a], led.published_shares[b]],
                                             ex.commitments, ex.com_w)
            return self.dealer.extras.opening
        if isinstance(pred, SecretShare):
            if pred.index in shares_known:
                return self.dealer.extras.shares[pred.index - 1]
            return None
        return None

    def honest_witness(self, party: int, pred, r: int):
        led = self.ledger
        tokens = led.visible_tokens(r, strict=True) | {party}
        shares = set(led.visible_shares(r, strict=True))
        if party == self.graph.n - 1 and self.dealer.extras is not None:
            shares |= {s.index for s in self.dealer.extras.shares}
        return self._witness(pred, tokens, self._w_known(r, True, party), shares)

    def coalition_witness(self, pred, r: int):
        led = self.ledger
        tokens = led.visible_tokens(r, strict=False) | set(self.corrupted)
        shares = set(led.visible_shares(r, strict=False))
        if self.graph.n - 1 in self.corrupted and self.dealer.extras is not None:
            shares |= {s.index for s in self.dealer.extras.shares}
        return self._witness(pred, tokens, self._w_known(r, False, None), shares)

    def deposit_phase_complete(self) -> bool:
        return len(self.ledger.records) == len(self.graph.specs)

    def groups_complete_before(self, group: int) -> bool:
        recs = self.ledger.records
        return all(self.graph.spec(i).ssid in recs
                   for g in range(group - 1) for i in self.graph.deposit_rounds[g])

    def active(self, party: int, r: int) -> bool:
        if self.deposit_phase_complete():
            return True
        return self.woken.get(party, r) < r

    # honest choices, also used to decide what FOLLOW_HONEST means for the coalition

    def honest_deposits(self, s: DepositSpec) -> bool:
        return self.groups_complete_before(s.group)

    def honest_claim(self, s: DepositSpec, r: int):
        rec = self._record(s)
        if rec is None or rec.status is not Status.OPEN or r != s.claim_deadline:
            return None
        if not self.active(s.receiver, r):
            return None
        return self.honest_witness(s.receiver, s.claim_predicate, r)

    def honest_refund_pick(self, party: int, r: int) -> Optional[DepositSpec]:
        if self.refunded_by.get(party, 0) >= 1:
            return None
        for s in self.plan.get(r, _EMPTY)[2]:
            if s.sender == party:
                rec = self._record(s)
                if rec is not None and rec.status is Status.OPEN:
                    if self.honest_witness(party, s.refund_predicate, r) is not None:
                        return s
        return None

    # mutations

    def open(self, s: DepositSpec, r: int) -> None:
        terms = (s.refund_predicate, s.refund_deadline) if s.is_crg else None
        self.ledger.open_deposit(s.sender, s.receiver, s.amount, s.claim_predicate,
                                 s.claim_deadline, terms, round=r, ssid=s.ssid)

    def claim(self, s: DepositSpec, witness, r: int) -> None:
        self.ledger.claim(s.ssid, s.receiver, witness, r)
        if s.sender not in self.woken:
            self.woken = dict(self.woken)
            self.woken[s.sender] = r
        if isinstance(s.claim_predicate, WitnessW):
            self.w_claims += 1

    def refund(self, s: DepositSpec, witness, r: int) -> None:
        self.ledger.refund(s.ssid, s.sender, witness, round=r)
        self.refunded_by[s.sender] = self.refunded_by.get(s.sender, 0) + 1

    def honest_phase(self, r: int) -> None:
        g = self.graph
        deps, claims, _ = self.plan.get(r, _EMPTY)
        self.ledger.settle_expired(r)
        for s in deps:
            if s.sender not in self.corrupted and self.honest_deposits(s):
                self.open(s, r)
        # claims use only data public before r, so their order inside the round is irrelevant
        for s in claims:
            if s.receiver not in self.corrupted:
                w = self.honest_claim(s, r)
                if w is not None:
                    self.claim(s, w, r)
        for p in range(1, g.n + 1):
            if p not in self.corrupted:
                pick = self.honest_refund_pick(p, r)
                if pick is not None:
                    self.refund(pick, self.honest_witness(p, pick.refund_predicate, r), r)

    def decisions(self, r: int) -> list[tuple[tuple[str, int], tuple[Action, ...], Action]]:
        """Coalition decisions live in round r: (key, options, honest-equivalent option)."""
        out = []
        C = self.corrupted
        deps, claims, refunds = self.plan.get(r, _EMPTY)
        for s in deps:
            if s.sender in C:
                honest = Action.DEPOSIT_MAKE if self.honest_deposits(s) else Action.DEPOSIT_SKIP
                out.append((("deposit", s.index), (Action.DEPOSIT_MAKE, Action.DEPOSIT_SKIP), honest))
        for s in claims:
            if s.receiver in C:
                rec = self._record(s)
                if rec is None or rec.status is not Status.OPEN:
                    continue
                if self.coalition_witness(s.claim_predicate, r) is None:
                    continue
                honest = Action.CLAIM_NOW if self.honest_claim(s, r) is not None else Action.WITHHOLD
                out.append((("claim", s.index), (Action.CLAIM_NOW, Action.WITHHOLD), honest))
        picks = {}
        for s in refunds:
            if s.sender in C:
                rec = self._record(s)
                if rec is None or rec.status is not Status.OPEN:
                    continue
                if self.coalition_witness(s.refund_predicate, r) is None:
                    continue
                if s.sender not in picks:
                    picks[s.sender] = self.honest_refund_pick(s.sender, r)
                honest = Action.REFUND_WITH if picks[s.sender] is s else Action.FORGO
                out.append((("refund", s.index), (Action.REFUND_WITH, Action.FORGO), honest))
        return out

    def apply(self, r: int, choice: Mapping) -> None:
        """Apply coalition choices (already resolved to concrete actions)."""
        g = self.graph
        # deposits first, then claims, then refunds, in spec order
        for kind in ("deposit", "claim", "refund"):
            for (k, idx), act in sorted(choice.items()):
                if k != kind:
                    continue
                s = g.spec(idx)
                if kind == "deposit" and act is Action.DEPOSIT_MAKE:
                    self.open(s, r)
                elif kind == "claim" and act is Action.CLAIM_NOW:
                    self.claim(s, self.coalition_witness(s.claim_predicate, r), r)
                elif kind == "refund" and act is Action.REFUND_WITH:
                    self.refund(s, self.coalition_witness(s.refund_predicate, r), r)

    def end_round(self) -> None:
        if not self.ledger.conserved():
            self.supply_ok = False

    def outcome(self, schedule: Optional[AdversarySchedule] = None) -> ExecutionOutcome:
        led, g = self.ledger, self.graph
        public = set(led.token_round)
        everyone = set(range(1, g.n + 1))
        honest = everyone - self.corrupted
        all_public = everyone <= public
        learned = LearnedOutputFlag(honest <= public,
                                    {p: all_public for p in sorted(honest)})
        acting = [ev.round for ev in led.events if ev.kind.value in ("deposit", "claim", "refund")]
        agg = g.n - 1
        step3 = sum(1 for ev in led.events if ev.kind.value == "refund"
                    and led.records[ev.ssid].sender == agg
                    and g.spec(int(ev.ssid[2:])).role == "step3")
        w_claims = sum(1 for ev in led.events if ev.kind.value == "claim"
                       and isinstance(ev.witness, WOpening))
        return ExecutionOutcome(
            net_balances=led.net_balances(),
            learned=learned,
            rounds_used=max(acting, default=0),
            calls_used=sum(1 for ev in led.events if ev.kind.value == "deposit"),
            trace=list(led.events),
            corrupted=self.corrupted,
            supply_ok=self.supply_ok and led.conserved(),
            step3_refunds=step3,
            w_claims=w_claims,
            schedule=schedule,
        )


def default_dealer(graph: DepositGraph, seed: int = 0) -> DealerOutput:
    return deal_output(DEFAULT_SECRET, graph.n,
                       with_equiv_extras=graph.variant.tag == "OursEquiv", seed=seed)


def _resolve(schedule: AdversarySchedule, live) -> dict:
    choice = {}
    for key, options, honest in live:
        act = schedule.action(*key)
        choice[key] = honest if act is Action.FOLLOW_HONEST else act
    return choice


def execute(graph: DepositGraph, schedule: AdversarySchedule,
            dealer_output: Optional[DealerOutput] = None) -> ExecutionOutcome:
    schedule.validate(graph)
    dealer = dealer_output if dealer_output is not None else default_dealer(graph)
    if dealer.n != graph.n:
        raise MalformedSchedule("dealer output is for a different party count")
    run = _Run(graph, dealer, schedule.corrupted)
    for r in range(1, graph.horizon + 1):
        run.honest_phase(r)
        run.apply(r, _resolve(schedule, run.decisions(r)))
        run.end_round()
    return run.outcome(schedule)


def _explore(graph: DepositGraph, corrupted, dealer: DealerOutput, merge: str = "honest",
             stats: Optional[list] = None):
    """Round-by-round search over coalition choices, merging identical states.

    Yields (actions, run) for every distinct final state. The first option of
    every decision is tried as the honest-equivalent one, so the all-honest
    path survives as the representative of its state. Among merged states the
    one where a corrupted aggregator is richest is kept; merged states share
    their futures, so this preserves the maximum of its final balance.

    ``merge`` picks the state projection: "honest" also fast-forwards states
    nothing honest can change any more and forgets deposits nobody honest can
    claim, "coalition" keeps those so every coalition-internal future of the
    aggregator survives, and "state" merges only byte-identical ledgers.
    """
    if merge == "honest":
        keyf = _Run.honest_key
    elif merge == "coalition":
        keyf = lambda run, r: run.honest_key(r, prune=False)
    elif merge == "state":
        keyf = lambda run, r: run.key()
    else:
        raise ValueError(f"unknown merge mode {merge!r}")
    start = _Run(graph, dealer, corrupted)
    layer = {None: ((), start)}
    done: dict = {}
    last = graph.horizon
    for r in range(1, last + 1):
        nxt: dict = {}
        for acts, run in layer.values():
            run.honest_phase(r)
            # coalition decisions inside a round do not depend on each other,
            # so they are expanded one at a time and merged after each step
            partial = [(acts, run)]
            for key, options, honest in run.decisions(r):
                ordered = (honest,) + tuple(o for o in options if o is not honest)
                seen: dict = {}
                for acts2, st in partial:
                    for j, opt in enumerate(ordered):
                        # the last option may reuse the state itself
                        b = st if j == len(ordered) - 1 else st.copy()
                        b.apply(r, {key: opt})
                        k = keyf(b, r)
                        if k not in seen or b.rank() > seen[k][1].rank():
                            seen[k] = (acts2 if opt is honest else acts2 + ((key, opt),), b)
                partial = list(seen.values())
            for acts2, st in partial:
                st.end_round()
                if merge == "honest" and r < last and st.frozen(r):
                    acts2 = _run_passive(st, acts2, r + 1, last)
                    _keep(done, keyf(st, last), acts2, st)
                else:
                    _keep(nxt, keyf(st, r), acts2, st)
        layer = nxt
        if stats is not None:
            stats.append(len(layer))
    for k, v in done.items():
        _keep(layer, k, *v)
    for acts, run in layer.values():
        yield dict(acts), run


def _keep(table: dict, k, acts, run) -> None:
    if k not in table or run.rank() > table[k][1].rank():
        table[k] = (acts, run)


_PASSIVE = {"deposit": Action.DEPOSIT_SKIP, "claim": Action.WITHHOLD, "refund": Action.FORGO}


def _run_passive(run: _Run, acts: tuple, first: int, last: int) -> tuple:
    """Finish an execution with the coalition doing nothing further."""
    for r in range(first, last + 1):
        run.honest_phase(r)
        choice = {}
        for key, _, honest in run.decisions(r):
            act = _PASSIVE[key[0]]
            choice[key] = act
            if act is not honest:
                acts = acts + ((key, act),)
        run.apply(r, choice)
        run.end_round()
    return acts


def _check_corrupted(graph: DepositGraph, corrupted) -> frozenset:
    corrupted = frozenset(corrupted)
    if len(corrupted) >= graph.n:
        raise FullCorruption(f"{len(corrupted)} of {graph.n} parties corrupted")
    if not all(1 <= p <= graph.n for p in corrupted):
        raise MalformedSchedule("corrupted party outside 1..n")
    return corrupted


def enumerate_schedules(graph: DepositGraph, corrupted,
                        dealer_output: Optional[DealerOutput] = None, *,
                        merge: str = "honest") -> Iterator[AdversarySchedule]:
    """Every coalition schedule in the bounded action space, one per distinct outcome.

    Each corrupted deposit may be made or skipped, each claimable deposit to
    the coalition claimed at its deadline or withheld, and each refundable
    CRG deposit refunded or forgone. Schedules reaching an identical ledger
    state are merged.
    """
    corrupted = _check_corrupted(graph, corrupted)
    dealer = dealer_output if dealer_output is not None else default_dealer(graph)
    if not corrupted:
        yield follow_honest()
        return
    for acts, _ in _explore(graph, corrupted, dealer, merge):
        yield AdversarySchedule(corrupted, acts)


def enumerate_outcomes(graph: DepositGraph, corrupted,
                       dealer_output: Optional[DealerOutput] = None, *,
                       merge: str = "honest") -> Iterator[ExecutionOutcome]:
    """Like enumerate_schedules, but hands back the outcome of each schedule too."""
    corrupted = _check_corrupted(graph, corrupted)
    dealer = dealer_output if dealer_output is not None else default_dealer(graph)
    if not corrupted:
        yield execute(graph, follow_honest(), dealer)
        return
    for acts, run in _explore(graph, corrupted, dealer, merge):
        yield run.outcome(AdversarySchedule(corrupted, acts))


# Named schedules ---------------------------------------------------------------

def _specs(graph, role):
    return [s for s in graph.specs if s.role == role]


def fig3_abort(graph: DepositGraph) -> AdversarySchedule:
    """Ours: P1 withholds its step-3 claim and P_n does not claim the final round."""
    n = graph.n
    acts = {("claim", s.index): Action.WITHHOLD
            for s in graph.specs if s.receiver == 1 and s.role == "step3"}
    acts.update({("claim", s.index): Action.WITHHOLD for s in _specs(graph, "step1")})
    return AdversarySchedule(frozenset({1, n}), acts, "fig3_abort")


def middle_abort(graph: DepositGraph, aborters, *, with_last: bool = True) -> AdversarySchedule:
    """Middle parties ``aborters`` withhold their step-3 claims; P_n (if included) withholds too."""
    n = graph.n
    C = set(aborters) | ({n} if with_last else set())
    acts = {("claim", s.index): Action.WITHHOLD
            for s in graph.specs if s.role == "step3" and s.receiver in aborters}
    if with_last:
        acts.update({("claim", s.index): Action.WITHHOLD for s in _specs(graph, "step1")})
    return AdversarySchedule(frozenset(C), acts, "middle_abort")


def remark1(graph: DepositGraph) -> AdversarySchedule:
    """P1 and P2 withhold at their step-3 deadline, together with P_n."""
    sched = middle_abort(graph, (1, 2))
    return AdversarySchedule(sched.corrupted, sched.actions, "remark1")


def remark2(graph: DepositGraph) -> AdversarySchedule:
    """MergedTau34: all but P_n hide their tokens until the merged last round,
    then P_{n-1} claims from P_n in that round."""
    n = graph.n
    acts = {("claim", s.index): Action.WITHHOLD
            for s in graph.specs if s.role in ("step3", "step4")}
    acts.update({("claim", s.index): Action.CLAIM_NOW for s in _specs(graph, "step2")})
    return AdversarySchedule(frozenset(range(1, n)), acts, "remark2")


def naive2_steal(graph: DepositGraph) -> AdversarySchedule:
    """Naive2: P2 never deposits, then claims P1's deposit with its own token."""
    acts = {("deposit", 2): Action.DEPOSIT_SKIP, ("claim", 1): Action.CLAIM_NOW}
    return AdversarySchedule(frozenset({2}), acts, "naive2_steal")


def equiv_double_refund(graph: DepositGraph) -> AdversarySchedule:
    """OursEquiv: P1 and P2 withhold at their step-3 deadline and the corrupted
    aggregator refunds both; P_n withholds as well. The coalition claims its
    own w-deposits."""
    n = graph.n
    C = {1, 2, n - 1, n}
    acts = {}
    for s in graph.specs:
        if s.role == "step3" and s.receiver in (1, 2):
            acts[("claim", s.index)] = Action.WITHHOLD
            acts[("refund", s.index)] = Action.REFUND_WITH
        elif s.role == "extra" and s.receiver in (1, 2):
            acts[("claim", s.index)] = Action.CLAIM_NOW
        elif s.role == "step1":
            acts[("claim", s.index)] = Action.WITHHOLD
        elif s.role == "step2":
            acts[("claim", s.index)] = Action.WITHHOLD
    return AdversarySchedule(frozenset(C), acts, "equiv_double_refund")


NAMED_SCHEDULES = {
    "follow_honest": lambda graph: follow_honest(),
    "fig3_abort": fig3_abort,
    "remark1": remark1,
    "remark2": remark2,
    "naive2_steal": naive2_steal,
    "equiv_double_refund": equiv_double_refund,
}


def named_schedule(name: str, graph: DepositGraph) -> AdversarySchedule:
    try:
        return NAMED_SCHEDULES[name](graph)
    except KeyError:
        raise MalformedSchedule(f"unknown schedule {name!r}") from None
