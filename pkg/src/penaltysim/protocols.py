"""Fair-reconstruction protocol variants compiled to deposit graphs.

A graph lists every conditional transfer a variant creates, in transaction
order, grouped into deposit-phase rounds. Claim deadlines are symbolic
labels (τ1 < τ2 < ...) mapped to absolute rounds after the deposit phase;
honest parties claim each deposit at its deadline, in the reverse order of
the deposit groups.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

from .settlement import (Predicate, SecretShare, TokenConjunction, WitnessW)

VARIANT_TAGS = ("Naive2", "BK2", "BKn", "Ours", "OursReduced", "OursEquiv", "MergedTau34")


class UnsupportedArity(ValueError):
    pass


class UnknownParty(KeyError):
    pass


@dataclass(frozen=True)
class ProtocolVariant:
    tag: str
    l: int = 1

    def __post_init__(self):
        if self.tag not in VARIANT_TAGS:
            raise ValueError(f"unknown variant {self.tag!r}")
        if self.l < 1:
            raise ValueError("l must be positive")

    @classmethod
    def parse(cls, text: str) -> "ProtocolVariant":
        m = re.fullmatch(r"\s*(\w+)\s*(?:\(\s*(?:l\s*=\s*)?(\d+)\s*\))?\s*", text)
        if not m:
            raise ValueError(f"cannot parse variant {text!r}")
        return cls(m.group(1), int(m.group(2) or 1))

    def __str__(self) -> str:
        return f"OursReduced({self.l})" if self.tag == "OursReduced" else self.tag

    def check_arity(self, n: int) -> None:
        if self.tag in ("Naive2", "BK2"):
            if n != 2:
                raise UnsupportedArity(f"{self} needs n = 2, got {n}")
        elif self.tag == "OursReduced":
            chain = self.l + 1
            if (n - 2) % chain or (n - 2) // chain < 2:
                raise UnsupportedArity(
                    f"{self} needs n-2 to be a multiple of {chain} with at least two "
                    f"chains, got n = {n}")
        elif n < 3:
            raise UnsupportedArity(f"{self} needs n >= 3, got {n}")


@dataclass(frozen=True)
class DepositSpec:
    index: int
    sender: int
    receiver: int
    coeff: int  # amount in units of q
    amount: int
    claim_predicate: Predicate
    claim_label: str
    claim_deadline: int
    group: int
    deposit_round: int
    role: str
    refund_predicate: Optional[Predicate] = None
    refund_label: Optional[str] = None
    refund_deadline: Optional[int] = None

    @property
    def is_crg(self) -> bool:
        return self.refund_predicate is not None

    @property
    def ssid(self) -> str:
        return f"tx{self.index}"

    def arrow(self) -> str:
        amt = "q" if self.coeff == 1 else f"{self.coeff}q"
        head = f"({self.index}) P{self.sender} →[{amt}, {self.claim_label}]" \
               f"{{{self.claim_predicate.describe()}}} P{self.receiver}"
        if self.is_crg:
            head += f"  refund{{{self.refund_predicate.describe()}}} by {self.refund_label}"
        return head


@dataclass(frozen=True)
class HonestStep:
    round: int
    party: int
    action: str  # "deposit" or "claim"
    spec: int


@dataclass(frozen=True)
class DepositGraph:
    variant: ProtocolVariant
    n: int
    q: int
    specs: tuple[DepositSpec, ...]
    deposit_rounds: tuple[tuple[int, ...], ...]
    labels: dict = field(hash=False)  # label -> absolute round
    claim_labels: tuple[str, ...] = ()

    def spec(self, index: int) -> DepositSpec:
        return self.specs[index - 1]

    @property
    def last_round(self) -> int:
        return len(self.deposit_rounds) + len(self.claim_labels)

    @property
    def horizon(self) -> int:
        """Last round in which the functionality may still settle something."""
        last = max(s.refund_deadline or s.claim_deadline for s in self.specs)
        return last + 1

    @property
    def honest_schedule(self) -> tuple[HonestStep, ...]:
        steps = [HonestStep(s.deposit_round, s.sender, "deposit", s.index) for s in self.specs]
        steps += [HonestStep(s.claim_deadline, s.receiver, "claim", s.index) for s in self.specs]
        return tuple(sorted(steps, key=lambda h: (h.round, h.action != "deposit", h.spec)))

    def initial_wallets(self) -> dict[int, int]:
        return {p: max_deposit(self, p) for p in range(1, self.n + 1)}

    def listing(self) -> str:
        lines = [f"# {self.variant} n={self.n} q={self.q}"]
        lines.append("# rounds: " + ", ".join(f"{k}={v}" for k, v in self.labels.items()))
        for g, members in enumerate(self.deposit_rounds, start=1):
            lines.append(f"-- deposit round {g}")
            lines.extend(self.spec(i).arrow() for i in members)
        return "\n".join(lines) + "\n"


class _Builder:
    def __init__(self, n: int, q: int, claim_labels: list[str]):
        self.n, self.q = n, q
        self.claim_labels = claim_labels
        self.groups: list[list[dict]] = []

    def group(self) -> list[dict]:
        self.groups.append([])
        return self.groups[-1]

    def add(self, sender, receiver, coeff, pred, label, role, refund=None):
        self.groups[-1].append(dict(sender=sender, receiver=receiver, coeff=coeff,
                                    pred=pred, label=label, role=role, refund=refund))

    def finish(self, variant: ProtocolVariant) -> DepositGraph:
        d = len(self.groups)
        labels = {lab: d + k for k, lab in enumerate(self.claim_labels, start=1)}
        labels = {**{f"deposit{g}": g for g in range(1, d + 1)}, **labels}
        specs, rounds = [], []
        extras = []
        for g, items in enumerate(self.groups, start=1):
            members = []
            for it in items:
                target = extras if it["role"] == "extra" else specs
                target.append((g, it))
            rounds.append(members)
        out = []
        for g, it in specs + extras:
            idx = len(out) + 1
            rp = rl = rd = None
            if it["refund"] is not None:
                rp, rl = it["refund"]
                rd = labels[rl]
            out.append(DepositSpec(idx, it["sender"], it["receiver"], it["coeff"],
                                   it["coeff"] * self.q, it["pred"], it["label"],
                                   labels[it["label"]], g, g, it["role"], rp, rl, rd))
            rounds[g - 1].append(idx)
        return DepositGraph(variant, self.n, self.q, tuple(out),
                            tuple(tuple(r) for r in rounds), labels,
                            tuple(self.claim_labels))


def _conj(*idx: int) -> TokenConjunction:
    return TokenConjunction(tuple(idx))


def _all(upto: int) -> TokenConjunction:
    return TokenConjunction(tuple(range(1, upto + 1)))


def _naive2(b: _Builder) -> None:
    b.group()
    b.add(1, 2, 1, _conj(2), "τ", "naive")
    b.group()
    b.add(2, 1, 1, _conj(1), "τ", "naive")


def _bkn(b: _Builder) -> None:
    n = b.n
    b.group()
    for i in range(1, n):
        b.add(i, n, 1, _all(n), f"τ{n}", "to_last")
    for k in range(n, 1, -1):
        b.group()
        b.add(k, k - 1, k - 1, _all(k - 1), f"τ{k - 1}", "chain")


def _ours(b: _Builder, *, final_label="τ4", equiv=False) -> None:
    n = b.n
    agg = n - 1
    b.group()
    for i in range(1, n):
        b.add(i, n, 1, _all(n), final_label, "step1")
    b.group()
    b.add(n, agg, n - 1, _all(n - 1), "τ3", "step2")
    b.group()
    for i in range(n - 2, 0, -1):
        refund = (SecretShare(i), "τ'2") if equiv else None
        b.add(agg, i, n - 1, _conj(agg, i), "τ2", "step3", refund)
    if equiv:
        for i in range(1, n - 1):
            b.add(agg, i, n - 1, WitnessW(), "τ''2", "extra")
    b.group()
    for i in range(n - 2, 0, -1):
        b.add(i, agg, n - 2, _conj(agg), "τ1", "step4")


def chain_members(n: int, l: int) -> list[list[int]]:
    """Middle-party chains for the reduced-deposit variant.

    Chain t holds one party per layer k = 0..l; layer k is the block of
    parties k*m+1 .. (k+1)*m, taken ascending on even layers and descending on
    odd ones, so at l = 1 lower party i pairs with upper party n-1-i.
    """
    m = (n - 2) // (l + 1)
    chains = []
    for t in range(1, m + 1):
        chains.append([k * m + t if k % 2 == 0 else (k + 1) * m + 1 - t
                       for k in range(l + 1)])
    return chains


def _ours_reduced(b: _Builder, l: int) -> None:
    n = b.n
    agg = n - 1
    top = l + 4
    chains = chain_members(n, l)[::-1]
    b.group()
    for i in range(1, n):
        b.add(i, n, 1, _all(n), f"τ{top}", "step1")
    b.group()
    b.add(n, agg, n - 1, _all(n - 1), f"τ{top - 1}", "step2")
    b.group()
    for c in chains:
        b.add(agg, c[0], n - 1, _conj(agg, *reversed(c)), f"τ{top - 2}", "layer0")
    for k in range(1, l + 1):
        b.group()
        for c in chains:
            b.add(c[k - 1], c[k], n - 1 - k, _conj(agg, *reversed(c[k:])),
                  f"τ{top - 2 - k}", f"layer{k}")
    b.group()
    for c in chains:
        b.add(c[-1], agg, n - 2 - l, _conj(agg), "τ1", "to_agg")


def build(variant: ProtocolVariant, n: int, q: int) -> DepositGraph:
    if isinstance(variant, str):
        variant = ProtocolVariant.parse(variant)
    variant.check_arity(n)
    if q < 1:
        raise ValueError("q must be at least 1")
    tag = variant.tag
    if tag == "Naive2":
        b = _Builder(n, q, ["τ"])
        _naive2(b)
    elif tag in ("BK2", "BKn"):
        b = _Builder(n, q, [f"τ{i}" for i in range(1, n + 1)])
        _bkn(b)
    elif tag == "Ours":
        b = _Builder(n, q, ["τ1", "τ2", "τ3", "τ4"])
        _ours(b)
    elif tag == "MergedTau34":
        b = _Builder(n, q, ["τ1", "τ2", "τ3"])
        _ours(b, final_label="τ3")
    elif tag == "OursEquiv":
        b = _Builder(n, q, ["τ1", "τ2", "τ'2", "τ''2", "τ3", "τ4"])
        _ours(b, equiv=True)
    else:
        b = _Builder(n, q, [f"τ{i}" for i in range(1, variant.l + 5)])
        _ours_reduced(b, variant.l)
    return b.finish(variant)


def call_count(graph: DepositGraph) -> int:
    return len(graph.specs)


def round_count(graph: DepositGraph) -> int:
    return len(graph.deposit_rounds) + len(graph.claim_labels)


def max_deposit(graph: DepositGraph, party: int) -> int:
    if not 1 <= party <= graph.n:
        raise UnknownParty(party)
    return sum(s.amount for s in graph.specs if s.sender == party)


def minimal_refill_factor(n: int) -> int:
    """Smallest x with (n-2)x > (n-3)(x+1)."""
    if n < 3:
        raise ValueError("n must be at least 3")
    x = 1
    while not (n - 2) * x > (n - 3) * (x + 1):
        x += 1
    return x
