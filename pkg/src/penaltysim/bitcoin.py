"""Claim-refund-or-give deposits on a toy UTXO chain.

One CRG deposit becomes four transactions: the deposit itself plus three
possible spends of it (claim, refund, give). The deposit's output script is

    CheckSig(pk_r) AND (phi_claim
                        OR (CheckSig(pk_s) AND phi_refund)
                        OR (CheckSig(pk_s) AND HashLock(H(lambda))))

Refund and give are made safe by counter-signatures exchanged before the
deposit is broadcast: the receiver signs the sender's refund transaction
(locktime tau_claim), and the sender signs the receiver's give transaction
(locktime tau_refund). A transaction with locktime l confirms from round
l + 1 on.

The script is evaluated directly on the combinator tree, not by a stack
machine. Signatures are Ed25519 over the spending transaction's simplified
form (everything but its input script).
"""

from __future__ import annotations

import hashlib
import itertools
import json
import random
from dataclasses import dataclass, field
from typing import Any, Iterator, Optional

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric.ed25519 import (Ed25519PrivateKey,
                                                               Ed25519PublicKey)
from cryptography.hazmat.primitives.serialization import Encoding, PublicFormat

from .pubnmss import DealerOutput, PublicState, deal_output
from .settlement import (Ledger, Predicate, SecretShare, SettlementError, TokenConjunction,
                         witness_digest)


class BitcoinError(Exception):
    pass


class SignatureInvalid(BitcoinError):
    pass


class PredicateMismatch(BitcoinError):
    pass


class ScriptFailed(BitcoinError):
    pass


class Locktime(BitcoinError):
    pass


class AlreadySpent(BitcoinError):
    pass


# Keys ------------------------------------------------------------------------

@dataclass(frozen=True)
class KeyPair:
    secret: bytes  # 32-byte Ed25519 seed

    @property
    def _sk(self) -> Ed25519PrivateKey:
        return Ed25519PrivateKey.from_private_bytes(self.secret)

    @property
    def public(self) -> bytes:
        return self._sk.public_key().public_bytes(Encoding.Raw, PublicFormat.Raw)

    def sign(self, message: bytes) -> bytes:
        return self._sk.sign(message)


def fresh_keys(rng: random.Random) -> KeyPair:
    return KeyPair(rng.randbytes(32))


def verify(pk: bytes, message: bytes, sig: Optional[bytes]) -> bool:
    if sig is None:
        return False
    try:
        Ed25519PublicKey.from_public_bytes(pk).verify(sig, message)
    except (InvalidSignature, ValueError):
        return False
    return True


def hash160(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


# Scripts ---------------------------------------------------------------------

@dataclass(frozen=True)
class Witness:
    """Input script: signatures keyed by public key, a hash preimage, predicate data."""

    sigs: tuple = ()              # ((pk, sig), ...)
    preimage: Optional[bytes] = None
    data: Any = None

    def sig_for(self, pk: bytes) -> Optional[bytes]:
        for k, s in self.sigs:
            if k == pk:
                return s
        return None

    def to_obj(self) -> dict:
        return {"sigs": [[k.hex(), s.hex()] for k, s in self.sigs],
                "preimage": self.preimage.hex() if self.preimage is not None else None,
                "data": witness_digest(self.data)}


class Script:
    def evaluate(self, wit: Witness, simp: bytes) -> bool:
        raise NotImplementedError

    def to_obj(self):
        raise NotImplementedError


@dataclass(frozen=True)
class CheckSig(Script):
    pk: bytes

    def evaluate(self, wit: Witness, simp: bytes) -> bool:
        return verify(self.pk, simp, wit.sig_for(self.pk))

    def to_obj(self):
        return ["checksig", self.pk.hex()]


@dataclass(frozen=True)
class HashLock(Script):
    digest: bytes

    def evaluate(self, wit: Witness, simp: bytes) -> bool:
        return wit.preimage is not None and hash160(wit.preimage) == self.digest

    def to_obj(self):
        return ["hashlock", self.digest.hex()]


@dataclass(frozen=True)
class UserPredicate(Script):
    predicate: Predicate
    public: PublicState = field(compare=False)

    def evaluate(self, wit: Witness, simp: bytes) -> bool:
        return bool(self.predicate.evaluate(wit.data, self.public))

    def to_obj(self):
        return ["predicate", self.predicate.describe()]


@dataclass(frozen=True)
class And(Script):
    parts: tuple

    def evaluate(self, wit: Witness, simp: bytes) -> bool:
        return all(p.evaluate(wit, simp) for p in self.parts)

    def to_obj(self):
        return ["and", [p.to_obj() for p in self.parts]]


@dataclass(frozen=True)
class Or(Script):
    parts: tuple

    def evaluate(self, wit: Witness, simp: bytes) -> bool:
        return any(p.evaluate(wit, simp) for p in self.parts)

    def to_obj(self):
        return ["or", [p.to_obj() for p in self.parts]]


MUTATIONS = ("drop_receiver_sig", "drop_sender_sig_refund", "drop_sender_sig_give")


def crg_output_script(pk_s: bytes, pk_r: bytes, phi_claim: Predicate, phi_refund: Predicate,
                      lam_digest: bytes, public: PublicState,
                      mutation: Optional[str] = None) -> Script:
    """The deposit's output script; ``mutation`` deletes one of its three CheckSigs."""
    if mutation is not None and mutation not in MUTATIONS:
        raise ValueError(f"unknown mutation {mutation!r}")
    refund = (UserPredicate(phi_refund, public),)
    give = (HashLock(lam_digest),)
    if mutation != "drop_sender_sig_refund":
        refund = (CheckSig(pk_s),) + refund
    if mutation != "drop_sender_sig_give":
        give = (CheckSig(pk_s),) + give
    branches = Or((UserPredicate(phi_claim, public), And(refund), And(give)))
    if mutation == "drop_receiver_sig":
        return branches
    return And((CheckSig(pk_r), branches))


def _canon(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False).encode()


# Transactions and chain -------------------------------------------------------

@dataclass(frozen=True)
class Txn:
    prev_id: str
    amount: int
    input_script: Witness
    output_script: Script
    locktime: int = 0

    def simp(self) -> bytes:
        """The simplified form: (prev_id, x, pi, tau), no input script."""
        return _canon({"prev": self.prev_id, "x": self.amount,
                       "pi": self.output_script.to_obj(), "tau": self.locktime})

    def serialize(self) -> bytes:
        return _canon({"prev": self.prev_id, "x": self.amount,
                       "sigma": self.input_script.to_obj(),
                       "pi": self.output_script.to_obj(), "tau": self.locktime})

    def hex(self) -> str:
        return self.serialize().hex()

    @property
    def id(self) -> str:
        return hashlib.sha256(self.serialize()).hexdigest()


def unsigned(prev_id: str, amount: int, out: Script, locktime: int = 0) -> Txn:
    return Txn(prev_id, amount, Witness(), out, locktime)


class MiniChain:
    """Confirmed transactions per round and the unspent-output set."""

    def __init__(self):
        self.utxo: dict[str, Txn] = {}
        self.spent: dict[str, str] = {}        # spent id -> spender id
        self.confirmed: list[tuple[int, Txn]] = []

    def fund(self, pk: bytes, amount: int, tag: str = "") -> Txn:
        """Mint a coin owned by ``pk`` (stands in for any earlier funding)."""
        coin = unsigned(hashlib.sha256(b"coinbase" + pk + tag.encode()).hexdigest(), amount,
                        CheckSig(pk))
        self.utxo[coin.id] = coin
        self.confirmed.append((0, coin))
        return coin

    def submit(self, txn: Txn, round: int) -> Txn:
        if txn.prev_id in self.spent:
            raise AlreadySpent(f"{txn.prev_id[:12]} already spent by {self.spent[txn.prev_id][:12]}")
        prev = self.utxo.get(txn.prev_id)
        if prev is None:
            raise ScriptFailed(f"unknown input {txn.prev_id[:12]}")
        if round <= txn.locktime:
            raise Locktime(f"locktime {txn.locktime} not reached in round {round}")
        if txn.amount != prev.amount:
            raise ScriptFailed("amount must equal the spent output")
        if not prev.output_script.evaluate(txn.input_script, txn.simp()):
            raise ScriptFailed("input script does not satisfy the output script")
        del self.utxo[txn.prev_id]
        self.spent[txn.prev_id] = txn.id
        self.utxo[txn.id] = txn
        self.confirmed.append((round, txn))
        return txn

    def holdings(self) -> dict[bytes, int]:
        """Coins per key, for outputs locked by a single CheckSig."""
        out: dict[bytes, int] = {}
        for t in self.utxo.values():
            if isinstance(t.output_script, CheckSig):
                out[t.output_script.pk] = out.get(t.output_script.pk, 0) + t.amount
        return out

    def spender_of(self, txn_id: str) -> Optional[str]:
        return self.spent.get(txn_id)


# Deposit handshake -----------------------------------------------------------

@dataclass
class Party:
    name: str
    wallet: KeyPair                 # long-term key owning the party's coins

    @property
    def pk(self) -> bytes:
        return self.wallet.public


@dataclass(frozen=True)
class Message:
    step: int
    actor: str
    kind: str
    payload: dict

    def to_obj(self) -> dict:
        return {"step": self.step, "actor": self.actor, "kind": self.kind,
                "payload": self.payload}


@dataclass
class CrgDeposit:
    txn: Txn                      # the confirmed deposit transaction
    sender: Party
    receiver: Party
    deposit_keys_s: KeyPair       # pk_s inside the script
    deposit_keys_r: KeyPair       # pk_r inside the script (fresh, step 2)
    lam: bytes
    tau_claim: int
    tau_refund: int
    give_txn: Txn                 # unsigned; simp is what sig_s covers
    refund_txn: Txn               # unsigned; simp is what sig_r covers
    sig_s: bytes
    sig_r: bytes
    messages: list


@dataclass
class Tamper:
    """Deviations available to the handshake (all default to honest)."""

    abort_at: Optional[int] = None          # party stops before this step
    bad_sig_s: bool = False
    bad_sig_r: bool = False
    phi_refund_sent: Optional[Predicate] = None
    mutation: Optional[str] = None


class HandshakeAborted(BitcoinError):
    def __init__(self, step: int, messages: list):
        super().__init__(f"handshake stopped before step {step}")
        self.step = step
        self.messages = messages


def _flip(sig: bytes) -> bytes:
    return bytes([sig[0] ^ 1]) + sig[1:]


def crg_deposit_handshake(chain: MiniChain, funding: Txn, sender: Party, receiver: Party,
                          amount: int, phi_claim: Predicate, phi_refund: Predicate,
                          tau_claim: int, tau_refund: int, public: PublicState, *,
                          rng: random.Random, round: int = 1,
                          tamper: Optional[Tamper] = None) -> CrgDeposit:
    """Run the 13-step deposit phase and broadcast the deposit.

    ``funding`` is an unspent output of the sender's wallet key covering
    ``amount``. Returns the confirmed deposit together with the two
    pre-signed spends.
    """
    t = tamper or Tamper()
    if tau_claim >= tau_refund:
        raise ValueError("tau_claim must precede tau_refund")
    msgs: list[Message] = []
    ssid = rng.randbytes(4).hex()

    def step(k: int, actor: str, kind: str, **payload):
        if t.abort_at is not None and k >= t.abort_at:
            raise HandshakeAborted(k, msgs)
        msgs.append(Message(k, actor, kind, payload))

    step(1, sender.name, "deposit_init", ssid=ssid, tau_claim=tau_claim, tau_refund=tau_refund)
    keys_r = fresh_keys(rng)
    lam = rng.randbytes(16)
    step(2, receiver.name, "local_keygen", pk_r=keys_r.public.hex(),
         phi_refund=phi_refund.describe())
    sent = t.phi_refund_sent or phi_refund
    step(3, receiver.name, "deposit_ack", pk_r=keys_r.public.hex(),
         h_lambda=hash160(lam).hex(), phi_refund=sent.describe())
    if sent != phi_refund:
        raise PredicateMismatch(f"receiver proposed {sent.describe()}, "
                                f"sender expects {phi_refund.describe()}")
    keys_s = fresh_keys(rng)
    script = crg_output_script(keys_s.public, keys_r.public, phi_claim, phi_refund,
                               hash160(lam), public, t.mutation)
    body = unsigned(funding.id, amount, script)
    deposit = Txn(funding.id, amount,
                  Witness(((sender.pk, sender.wallet.sign(body.simp())),)), script)
    step(4, sender.name, "local_build", pi=script.to_obj())
    step(5, sender.name, "deposit_id", id_crg=deposit.id)
    give = unsigned(deposit.id, amount, CheckSig(receiver.pk), tau_refund)
    step(6, receiver.name, "local_prepare_give", locktime=tau_refund)
    step(7, receiver.name, "deposit_sign_give", simp_give=give.simp().hex())
    sig_s = keys_s.sign(give.simp())
    if t.bad_sig_s:
        sig_s = _flip(sig_s)
    step(8, sender.name, "deposit_sign_give_ack", sig_s=sig_s.hex())
    ok = verify(keys_s.public, give.simp(), sig_s)
    step(9, receiver.name, "local_verify_sig_s", ok=ok)
    if not ok:
        raise SignatureInvalid("sig_s does not verify (step 9)")
    # the refund spend carries locktime tau_claim so it confirms from tau_claim + 1
    refund = unsigned(deposit.id, amount, CheckSig(sender.pk), tau_claim)
    step(10, sender.name, "local_prepare_refund", locktime=tau_claim)
    step(11, sender.name, "deposit_sign_refund", simp_refund=refund.simp().hex())
    sig_r = keys_r.sign(refund.simp())
    if t.bad_sig_r:
        sig_r = _flip(sig_r)
    step(12, receiver.name, "deposit_sign_refund_ack", sig_r=sig_r.hex())
    ok = verify(keys_r.public, refund.simp(), sig_r)
    if not ok:
        msgs.append(Message(13, sender.name, "local_verify_sig_r", {"ok": False}))
        raise SignatureInvalid("sig_r does not verify (step 13)")
    step(13, sender.name, "broadcast", ok=True, id_crg=deposit.id)
    chain.submit(deposit, round)
    return CrgDeposit(deposit, sender, receiver, keys_s, keys_r, lam, tau_claim, tau_refund,
                      give, refund, sig_s, sig_r, msgs)


# Spends ------------------------------------------------------------------------

def redeem_claim(chain: MiniChain, dep: CrgDeposit, w_r: Any, round: int) -> Txn:
    """Receiver spends with its fresh key and a claim witness."""
    body = unsigned(dep.txn.id, dep.txn.amount, CheckSig(dep.receiver.pk))
    sig = dep.deposit_keys_r.sign(body.simp())
    txn = Txn(body.prev_id, body.amount,
              Witness(((dep.deposit_keys_r.public, sig),), data=w_r), body.output_script)
    return chain.submit(txn, round)


def redeem_refund(chain: MiniChain, dep: CrgDeposit, sig_r: bytes, w_s: Any, round: int) -> Txn:
    body = dep.refund_txn
    sig_s = dep.deposit_keys_s.sign(body.simp())
    wit = Witness(((dep.deposit_keys_r.public, sig_r), (dep.deposit_keys_s.public, sig_s)),
                  data=w_s)
    return chain.submit(Txn(body.prev_id, body.amount, wit, body.output_script, body.locktime),
                        round)


def redeem_give(chain: MiniChain, dep: CrgDeposit, sig_s: bytes, lam: Optional[bytes],
                round: int) -> Txn:
    body = dep.give_txn
    sig_r = dep.deposit_keys_r.sign(body.simp())
    wit = Witness(((dep.deposit_keys_r.public, sig_r), (dep.deposit_keys_s.public, sig_s)),
                  preimage=lam)
    return chain.submit(Txn(body.prev_id, body.amount, wit, body.output_script, body.locktime),
                        round)


def spend_custom(chain: MiniChain, dep: CrgDeposit, to: Party, round: int, *,
                 sign_r: bool = False, sign_s: bool = False, preimage: Optional[bytes] = None,
                 data: Any = None, locktime: int = 0) -> Txn:
    """A spend built outside the protocol, signed with whatever keys the caller holds."""
    body = unsigned(dep.txn.id, dep.txn.amount, CheckSig(to.pk), locktime)
    sigs = []
    if sign_r:
        sigs.append((dep.deposit_keys_r.public, dep.deposit_keys_r.sign(body.simp())))
    if sign_s:
        sigs.append((dep.deposit_keys_s.public, dep.deposit_keys_s.sign(body.simp())))
    txn = Txn(body.prev_id, body.amount, Witness(tuple(sigs), preimage, data),
              body.output_script, locktime)
    return chain.submit(txn, round)


# Equivalence with the ideal CRG ------------------------------------------------

@dataclass(frozen=True)
class CrgParams:
    amount: int
    tau_claim: int
    tau_refund: int
    phi_claim: Predicate
    phi_refund: Predicate
    dealer: DealerOutput
    w_claim: Any                  # a valid claim witness
    w_refund: Any                 # a valid refund witness
    seed: int = 0

    @property
    def horizon(self) -> int:
        return self.tau_refund + 2


def ours_equiv_params(n: int = 5, i: int = 1, *, q: int = 1, seed: int = 0) -> CrgParams:
    """Step-3 deposit P_{n-1} -> P_i of the equal-compensation variant."""
    dealer = deal_output(b"shared-output", n, with_equiv_extras=True, seed=seed)
    agg = n - 1
    phi_claim = TokenConjunction((agg, i))
    w_claim = {agg: dealer.token(agg), i: dealer.token(i)}
    return CrgParams((n - 1) * q, 6, 7, phi_claim, SecretShare(i), dealer,
                     w_claim, dealer.extras.shares[i - 1], seed)


@dataclass(frozen=True)
class Behavior:
    """One joint course of action for sender and receiver.

    claim: None | "earliest" | "latest" | "invalid"
    refund: None | "premature" | "earliest" | "latest" | "invalid"
    give: "earliest" | "latest"
    handshake: None (completes) or a deviation label
    """

    claim: Optional[str] = None
    refund: Optional[str] = None
    give: str = "earliest"
    handshake: Optional[str] = None

    def label(self) -> str:
        if self.handshake:
            return f"handshake:{self.handshake}"
        return f"claim={self.claim or '-'} refund={self.refund or '-'} give={self.give}"


def behavior_space() -> list[Behavior]:
    out = [Behavior(handshake=f"abort@{k}") for k in range(1, 14)]
    out += [Behavior(handshake="bad_sig_s"), Behavior(handshake="bad_sig_r"),
            Behavior(handshake="phi_mismatch")]
    for c, r, g in itertools.product((None, "earliest", "latest", "invalid"),
                                     (None, "premature", "earliest", "latest", "invalid"),
                                     ("earliest", "latest")):
        out.append(Behavior(c, r, g))
    return out


def _round_of(b: Behavior, p: CrgParams) -> dict:
    plan: dict[int, list[str]] = {}
    if b.claim in ("earliest", "invalid"):
        plan.setdefault(1, []).append("claim")
    elif b.claim == "latest":
        plan.setdefault(p.tau_claim, []).append("claim")
    if b.refund == "premature":
        plan.setdefault(p.tau_claim, []).append("refund")
    elif b.refund in ("earliest", "invalid"):
        plan.setdefault(p.tau_claim + 1, []).append("refund")
    elif b.refund == "latest":
        plan.setdefault(p.tau_refund, []).append("refund")
    plan.setdefault(p.tau_refund + 1 if b.give == "earliest" else p.horizon, []).append("give")
    return plan


_BAD = object()


def _ideal(p: CrgParams, b: Behavior) -> dict[str, int]:
    led = Ledger({1: p.amount, 2: 0}, p.dealer.public())
    if b.handshake:
        return {"sender": 0, "receiver": 0}
    ssid = led.open_deposit(1, 2, p.amount, p.phi_claim, p.tau_claim,
                            (p.phi_refund, p.tau_refund), round=1)
    plan = _round_of(b, p)
    for r in range(1, p.horizon + 1):
        led.settle_expired(r)
        for act in plan.get(r, ()):
            try:
                if act == "claim":
                    w = _BAD if b.claim == "invalid" else p.w_claim
                    led.claim(ssid, 2, w, r)
                elif act == "refund":
                    w = _BAD if b.refund == "invalid" else p.w_refund
                    led.refund(ssid, 1, w, round=r)
            except SettlementError:
                pass
    net = led.net_balances()
    return {"sender": net[1], "receiver": net[2]}


def _real(p: CrgParams, b: Behavior, mutation: Optional[str] = None) -> tuple[dict, list]:
    rng = random.Random(p.seed)
    chain = MiniChain()
    s = Party("Ps", fresh_keys(rng))
    r = Party("Pr", fresh_keys(rng))
    coin = chain.fund(s.pk, p.amount)
    tamper = Tamper(mutation=mutation)
    if b.handshake:
        if b.handshake.startswith("abort@"):
            tamper.abort_at = int(b.handshake[6:])
        elif b.handshake == "bad_sig_s":
            tamper.bad_sig_s = True
        elif b.handshake == "bad_sig_r":
            tamper.bad_sig_r = True
        elif b.handshake == "phi_mismatch":
            tamper.phi_refund_sent = TokenConjunction((1,))
    log = []
    try:
        dep = crg_deposit_handshake(chain, coin, s, r, p.amount, p.phi_claim, p.phi_refund,
                                    p.tau_claim, p.tau_refund, p.dealer.public(),
                                    rng=rng, tamper=tamper)
    except BitcoinError as e:
        log.append(type(e).__name__)
        dep = None
    if dep is not None:
        plan = _round_of(b, p)
        for rnd in range(1, p.horizon + 1):
            for act in plan.get(rnd, ()):
                try:
                    if act == "claim":
                        w = _BAD if b.claim == "invalid" else p.w_claim
                        redeem_claim(chain, dep, w, rnd)
                    elif act == "refund":
                        w = _BAD if b.refund == "invalid" else p.w_refund
                        redeem_refund(chain, dep, dep.sig_r, w, rnd)
                    else:
                        redeem_give(chain, dep, dep.sig_s, dep.lam, rnd)
                    log.append(f"{act}@{rnd}")
                except BitcoinError as e:
                    log.append(f"{act}@{rnd}:{type(e).__name__}")
    hold = chain.holdings()
    return {"sender": hold.get(s.pk, 0) - p.amount, "receiver": hold.get(r.pk, 0)}, log


@dataclass(frozen=True)
class EquivalenceResult:
    behavior: Behavior
    passed: bool
    real: dict
    ideal: dict
    log: tuple


def equivalence_test(params: CrgParams, behavior: Behavior,
                     mutation: Optional[str] = None) -> EquivalenceResult:
    """Same final allocation on the chain as in the ideal CRG?"""
    real, log = _real(params, behavior, mutation)
    ideal = _ideal(params, behavior)
    return EquivalenceResult(behavior, real == ideal, real, ideal, tuple(log))


def equivalence_suite(params: Optional[CrgParams] = None) -> list[EquivalenceResult]:
    params = params or ours_equiv_params()
    return [equivalence_test(params, b) for b in behavior_space()]


# Stealing with a weakened script --------------------------------------------

def _steal_attempts(p: CrgParams, mutation: Optional[str]) -> Iterator[tuple[str, dict, dict]]:
    """Out-of-protocol spends, each paired with what the ideal CRG would give.

    Yields (description, real allocation, ideal allocation).
    """
    def setup():
        rng = random.Random(p.seed)
        chain = MiniChain()
        s, r = Party("Ps", fresh_keys(rng)), Party("Pr", fresh_keys(rng))
        coin = chain.fund(s.pk, p.amount)
        dep = crg_deposit_handshake(chain, coin, s, r, p.amount, p.phi_claim, p.phi_refund,
                                    p.tau_claim, p.tau_refund, p.dealer.public(), rng=rng,
                                    tamper=Tamper(mutation=mutation))
        return chain, s, r, dep

    def alloc(chain, s, r):
        hold = chain.holdings()
        return {"sender": hold.get(s.pk, 0) - p.amount, "receiver": hold.get(r.pk, 0)}

    # sender refunds in round 1 with a spend of its own, ahead of a receiver
    # who would claim at the deadline
    chain, s, r, dep = setup()
    try:
        spend_custom(chain, dep, s, 1, sign_s=True, data=p.w_refund)
    except BitcoinError:
        pass
    try:
        redeem_claim(chain, dep, p.w_claim, p.tau_claim)
    except BitcoinError:
        pass
    yield ("sender refunds early without sig_r", alloc(chain, s, r),
           _ideal(p, Behavior(claim="latest")))

    # receiver without a claim witness takes the coins through the refund
    # branch before the sender's refund becomes valid
    chain, s, r, dep = setup()
    try:
        spend_custom(chain, dep, r, p.tau_claim, sign_r=True, data=p.w_refund)
    except BitcoinError:
        pass
    try:
        redeem_refund(chain, dep, dep.sig_r, p.w_refund, p.tau_claim + 1)
    except BitcoinError:
        pass
    yield ("receiver spends the refund branch", alloc(chain, s, r),
           _ideal(p, Behavior(refund="earliest")))

    # receiver without a claim witness takes the give branch before tau_refund
    chain, s, r, dep = setup()
    try:
        spend_custom(chain, dep, r, p.tau_claim, sign_r=True, preimage=dep.lam)
    except BitcoinError:
        pass
    try:
        redeem_refund(chain, dep, dep.sig_r, p.w_refund, p.tau_claim + 1)
    except BitcoinError:
        pass
    yield ("receiver gives to itself early", alloc(chain, s, r),
           _ideal(p, Behavior(refund="earliest")))

    # sender reuses sig_r on the give branch (blocked by the hash lock)
    chain, s, r, dep = setup()
    try:
        spend_custom(chain, dep, s, p.tau_claim + 1, sign_r=False, sign_s=True)
    except BitcoinError:
        pass
    try:
        redeem_give(chain, dep, dep.sig_s, dep.lam, p.tau_refund + 1)
    except BitcoinError:
        pass
    yield ("sender takes the give branch", alloc(chain, s, r), _ideal(p, Behavior()))


def steals(params: Optional[CrgParams] = None, mutation: Optional[str] = None) -> list[str]:
    """Descriptions of out-of-protocol spends that beat the ideal allocation."""
    params = params or ours_equiv_params()
    return [d for d, real, ideal in _steal_attempts(params, mutation) if real != ideal]


def late_claim_gap(params: Optional[CrgParams] = None) -> tuple[dict, dict]:
    """A claim after tau_claim still confirms on chain if the sender has not refunded.

    Returns (chain allocation, ideal allocation) for a receiver claiming at
    tau_claim + 1 against a sender who refunds at tau_refund.
    """
    p = params or ours_equiv_params()
    rng = random.Random(p.seed)
    chain = MiniChain()
    s, r = Party("Ps", fresh_keys(rng)), Party("Pr", fresh_keys(rng))
    coin = chain.fund(s.pk, p.amount)
    dep = crg_deposit_handshake(chain, coin, s, r, p.amount, p.phi_claim, p.phi_refund,
                                p.tau_claim, p.tau_refund, p.dealer.public(), rng=rng)
    redeem_claim(chain, dep, p.w_claim, p.tau_claim + 1)
    try:
        redeem_refund(chain, dep, dep.sig_r, p.w_refund, p.tau_refund)
    except BitcoinError:
        pass
    hold = chain.holdings()
    real = {"sender": hold.get(s.pk, 0) - p.amount, "receiver": hold.get(r.pk, 0)}
    return real, _ideal(p, Behavior(refund="latest"))


def handshake_transcript(params: Optional[CrgParams] = None) -> list[dict]:
    """Message sequence of an honest handshake, as plain data (for fixtures)."""
    p = params or ours_equiv_params()
    rng = random.Random(p.seed)
    chain = MiniChain()
    s, r = Party("Ps", fresh_keys(rng)), Party("Pr", fresh_keys(rng))
    coin = chain.fund(s.pk, p.amount)
    dep = crg_deposit_handshake(chain, coin, s, r, p.amount, p.phi_claim, p.phi_refund,
                                p.tau_claim, p.tau_refund, p.dealer.public(), rng=rng)
    return [m.to_obj() for m in dep.messages]
