"""Coin-conserving wallets plus claim-or-refund and claim-refund-or-give deposits.

Coins are integers in atomic units. A deposit moves ``amount`` out of the
sender's wallet when it is opened and credits exactly one wallet when it is
resolved. Every action is appended to an event trace; witnesses published by
claims and refunds go to a public transcript tagged with the round they
appeared in.

A record is CR when it has no refund terms: if unclaimed by its deadline it
goes back to the sender. A record is CRG when it carries a refund predicate
and a refund deadline: after the claim deadline the sender may take it back
only by publishing a refund witness, and if the sender does not, the coins
go to the receiver once the refund deadline has passed.
"""

from __future__ import annotations

import copy
import enum
import hashlib
import json
from dataclasses import dataclass, field
from typing import Any, Mapping, Optional, Union

from .pubnmss import (PublicState, ThresholdShare, TokenShare, WOpening,
                      verify_opening, verify_share, verify_token)


class SettlementError(Exception):
    pass


class InsufficientFunds(SettlementError):
    pass


class DuplicateSsid(SettlementError):
    pass


class DeadlineInPast(SettlementError):
    pass


class NotReceiver(SettlementError):
    pass


class NotSender(SettlementError):
    pass


class PredicateFailed(SettlementError):
    pass


class DeadlinePassed(SettlementError):
    pass


class NotOpen(SettlementError):
    pass


class TooEarly(SettlementError):
    pass


class NotCrg(SettlementError):
    pass


class UnknownParty(SettlementError):
    pass


# Predicates -----------------------------------------------------------------

@dataclass(frozen=True)
class TokenConjunction:
    """Satisfied by a mapping ``{index: TokenShare}`` covering every index."""

    indices: tuple[int, ...]

    def evaluate(self, witness: Any, public: PublicState) -> bool:
        if not isinstance(witness, Mapping):
            return False
        for i in self.indices:
            tok = witness.get(i)
            if tok is None or not 1 <= i <= len(public.tags):
                return False
            if not verify_token(public.tags[i - 1], tok):
                return False
        return True

    def describe(self) -> str:
        return "∧".join(f"T{i}" for i in self.indices)


@dataclass(frozen=True)
class SecretShare:
    """Satisfied by the threshold share S_index matching its commitment."""

    index: int

    def evaluate(self, witness: Any, public: PublicState) -> bool:
        if not isinstance(witness, ThresholdShare) or witness.index != self.index:
            return False
        if not 1 <= self.index <= len(public.share_commitments):
            return False
        return verify_share(public.share_commitments[self.index - 1], witness)

    def describe(self) -> str:
        return f"S{self.index}"


@dataclass(frozen=True)
class WitnessW:
    """Satisfied by an opening of com_w."""

    def evaluate(self, witness: Any, public: PublicState) -> bool:
        return public.com_w is not None and verify_opening(public.com_w, witness)

    def describe(self) -> str:
        return "w"


@dataclass(frozen=True)
class Tautology:
    def evaluate(self, witness: Any, public: PublicState) -> bool:
        return True

    def describe(self) -> str:
        return "⊤"


Predicate = Union[TokenConjunction, SecretShare, WitnessW, Tautology]


# Records and events ---------------------------------------------------------

class Status(enum.Enum):
    OPEN = "open"
    CLAIMED = "claimed"
    REFUNDED = "refunded"
    GIVEN = "given"


class EventKind(enum.Enum):
    DEPOSIT = "deposit"
    CLAIM = "claim"
    REFUND = "refund"
    GIVE = "give"
    AUTO_REFUND = "auto_refund"


@dataclass
class DepositRecord:
    ssid: str
    sender: int
    receiver: int
    amount: int
    claim_predicate: Predicate
    claim_deadline: int
    refund_predicate: Optional[Predicate] = None
    refund_deadline: Optional[int] = None
    status: Status = Status.OPEN

    @property
    def is_crg(self) -> bool:
        return self.refund_predicate is not None


def witness_digest(witness: Any) -> Optional[str]:
    """Short stable digest of a published witness, for traces."""
    if witness is None:
        return None
    h = hashlib.sha256()
    if isinstance(witness, Mapping):
        for i in sorted(witness):
            tok = witness[i]
            h.update(i.to_bytes(4, "big") + tok.share + tok.randomness)
    elif isinstance(witness, TokenShare):
        h.update(witness.share + witness.randomness)
    elif isinstance(witness, ThresholdShare):
        h.update(witness.index.to_bytes(4, "big") + witness.value_bytes() + witness.decommitment)
    elif isinstance(witness, WOpening):
        h.update(witness.w + witness.randomness)
    else:
        h.update(repr(witness).encode())
    return h.hexdigest()[:16]


@dataclass(frozen=True)
class LedgerEvent:
    round: int
    seq: int
    kind: EventKind
    ssid: str
    actor: int
    amount: int
    witness: Any = None

    def to_json(self) -> str:
        return json.dumps({
            "round": self.round,
            "seq": self.seq,
            "kind": self.kind.value,
            "ssid": self.ssid,
            "actor": self.actor,
            "amount": self.amount,
            "witness": witness_digest(self.witness),
        }, sort_keys=True)


# Ledger ---------------------------------------------------------------------

@dataclass
class Ledger:
    """Wallets, deposit records, event trace and public transcript."""

    initial: dict[int, int]
    public: PublicState
    wallets: dict[int, int] = field(init=False)
    records: dict[str, DepositRecord] = field(default_factory=dict, init=False)
    events: list[LedgerEvent] = field(default_factory=list, init=False)
    # first round each token / threshold share / w opening became public
    token_round: dict[int, int] = field(default_factory=dict, init=False)
    share_round: dict[int, int] = field(default_factory=dict, init=False)
    w_round: Optional[int] = field(default=None, init=False)
    published_tokens: dict[int, TokenShare] = field(default_factory=dict, init=False)
    published_shares: dict[int, ThresholdShare] = field(default_factory=dict, init=False)
    published_w: Optional[WOpening] = field(default=None, init=False)

    def __post_init__(self):
        if any(v < 0 for v in self.initial.values()):
            raise ValueError("initial holdings must be non-negative")
        self.initial = dict(self.initial)
        self.wallets = dict(self.initial)
        self._settled_through = -1

    @property
    def total_supply(self) -> int:
        return sum(self.initial.values())

    def copy(self) -> "Ledger":
        other = Ledger.__new__(Ledger)
        other.__dict__.update(self.__dict__)
        other.wallets = dict(self.wallets)
        # records are replaced, never mutated, once a ledger may be shared
        other.records = dict(self.records)
        other.events = list(self.events)
        other.token_round = dict(self.token_round)
        other.share_round = dict(self.share_round)
        other.published_tokens = dict(self.published_tokens)
        other.published_shares = dict(self.published_shares)
        return other

    # internal helpers

    def _party(self, p: int) -> None:
        if p not in self.wallets:
            raise UnknownParty(f"unknown party {p}")

    def _record(self, ssid: str) -> DepositRecord:
        try:
            return self.records[ssid]
        except KeyError:
            raise NotOpen(f"no deposit {ssid}") from None

    def _set_status(self, rec: DepositRecord, status: Status) -> DepositRecord:
        new = copy.copy(rec)
        new.status = status
        self.records[rec.ssid] = new
        return new

    def _emit(self, rnd: int, kind: EventKind, ssid: str, actor: int, amount: int,
              witness: Any = None) -> LedgerEvent:
        ev = LedgerEvent(rnd, len(self.events), kind, ssid, actor, amount, witness)
        self.events.append(ev)
        return ev

    def _publish(self, rnd: int, witness: Any) -> None:
        if isinstance(witness, Mapping):
            for i, tok in witness.items():
                if i not in self.token_round:
                    self.token_round[i] = rnd
                    self.published_tokens[i] = tok
        elif isinstance(witness, ThresholdShare):
            if witness.index not in self.share_round:
                self.share_round[witness.index] = rnd
                self.published_shares[witness.index] = witness
        elif isinstance(witness, WOpening):
            if self.w_round is None:
                self.w_round = rnd
                self.published_w = witness

    # operations

    def open_deposit(self, sender: int, receiver: int, amount: int,
                     claim_predicate: Predicate, claim_deadline: int,
                     refund_terms: Optional[tuple[Predicate, int]] = None, *,
                     round: int, ssid: Optional[str] = None) -> str:
        self._party(sender)
        self._party(receiver)
        if amount < 0:
            raise ValueError("amount must be non-negative")
        if ssid is None:
            ssid = f"d{len(self.records) + 1}"
        if ssid in self.records:
            raise DuplicateSsid(f"deposit {ssid} already exists")
        if round > claim_deadline:
            raise DeadlineInPast(f"round {round} is past claim deadline {claim_deadline}")
        refund_pred = refund_deadline = None
        if refund_terms is not None:
            refund_pred, refund_deadline = refund_terms
            if refund_deadline <= claim_deadline:
                raise DeadlineInPast("refund deadline must follow the claim deadline")
        if self.wallets[sender] < amount:
            raise InsufficientFunds(
                f"P{sender} holds {self.wallets[sender]}, needs {amount}")
        self.wallets[sender] -= amount
        self.records[ssid] = DepositRecord(ssid, sender, receiver, amount, claim_predicate,
                                           claim_deadline, refund_pred, refund_deadline)
        self._emit(round, EventKind.DEPOSIT, ssid, sender, amount)
        return ssid

    def claim(self, ssid: str, claimer: int, witness: Any, round: int) -> int:
        rec = self._record(ssid)
        if rec.status is not Status.OPEN:
            raise NotOpen(f"{ssid} is {rec.status.value}")
        if claimer != rec.receiver:
            raise NotReceiver(f"P{claimer} is not the receiver of {ssid}")
        if round > rec.claim_deadline:
            raise DeadlinePassed(f"{ssid} claim deadline {rec.claim_deadline} passed")
        if not rec.claim_predicate.evaluate(witness, self.public):
            raise PredicateFailed(f"witness does not satisfy {rec.claim_predicate.describe()}")
        rec = self._set_status(rec, Status.CLAIMED)
        self.wallets[rec.receiver] += rec.amount
        self._publish(round, witness)
        self._emit(round, EventKind.CLAIM, ssid, claimer, rec.amount, witness)
        return rec.amount

    def refund(self, ssid: str, sender: int, witness: Any = None, *, round: int) -> int:
        rec = self._record(ssid)
        if rec.status is not Status.OPEN:
            raise NotOpen(f"{ssid} is {rec.status.value}")
        if sender != rec.sender:
            raise NotSender(f"P{sender} is not the sender of {ssid}")
        if round <= rec.claim_deadline:
            raise TooEarly(f"{ssid} is claimable through round {rec.claim_deadline}")
        if rec.is_crg:
            if round > rec.refund_deadline:
                raise DeadlinePassed(f"{ssid} refund deadline {rec.refund_deadline} passed")
            if not rec.refund_predicate.evaluate(witness, self.public):
                raise PredicateFailed(
                    f"witness does not satisfy {rec.refund_predicate.describe()}")
            self._publish(round, witness)
        else:
            witness = None
        rec = self._set_status(rec, Status.REFUNDED)
        self.wallets[rec.sender] += rec.amount
        self._emit(round, EventKind.REFUND, ssid, sender, rec.amount, witness)
        return rec.amount

    def give(self, ssid: str, round: int) -> int:
        rec = self._record(ssid)
        if not rec.is_crg:
            raise NotCrg(f"{ssid} has no give phase")
        if rec.status is not Status.OPEN:
            raise NotOpen(f"{ssid} is {rec.status.value}")
        if round <= rec.refund_deadline:
            raise TooEarly(f"{ssid} is refundable through round {rec.refund_deadline}")
        rec = self._set_status(rec, Status.GIVEN)
        self.wallets[rec.receiver] += rec.amount
        self._emit(round, EventKind.GIVE, ssid, rec.receiver, rec.amount)
        return rec.amount

    def settle_expired(self, round: int) -> list[LedgerEvent]:
        """Auto-refund expired CR records and give expired CRG records."""
        out = []
        for rec in list(self.records.values()):
            if rec.status is not Status.OPEN:
                continue
            if not rec.is_crg and rec.claim_deadline < round:
                rec = self._set_status(rec, Status.REFUNDED)
                self.wallets[rec.sender] += rec.amount
                out.append(self._emit(round, EventKind.AUTO_REFUND, rec.ssid,
                                      rec.sender, rec.amount))
            elif rec.is_crg and rec.refund_deadline < round:
                self.give(rec.ssid, round)
                out.append(self.events[-1])
        return out

    # queries

    def net_balance(self, party: int) -> int:
        self._party(party)
        return self.wallets[party] - self.initial[party]

    def net_balances(self) -> dict[int, int]:
        return {p: self.wallets[p] - self.initial[p] for p in sorted(self.wallets)}

    def locked(self) -> int:
        return sum(r.amount for r in self.records.values() if r.status is Status.OPEN)

    def supply(self) -> int:
        return sum(self.wallets.values()) + self.locked()

    def conserved(self) -> bool:
        return self.supply() == self.total_supply

    def visible_tokens(self, round: int, *, strict: bool) -> set[int]:
        """Indices of tokens public before (strict) or by ``round``."""
        if strict:
            return {i for i, r in self.token_round.items() if r < round}
        return {i for i, r in self.token_round.items() if r <= round}

    def visible_shares(self, round: int, *, strict: bool) -> set[int]:
        if strict:
            return {i for i, r in self.share_round.items() if r < round}
        return {i for i, r in self.share_round.items() if r <= round}

    def w_visible(self, round: int, *, strict: bool) -> bool:
        if self.w_round is None:
            return False
        return self.w_round < round if strict else self.w_round <= round

    def trace_lines(self) -> list[str]:
        return [ev.to_json() for ev in self.events]
