"""Publicly verifiable secret sharing used by the fair-reconstruction phase.

Three pieces live here:

* hash commitments (``commit`` / ``verify_token``), which are the tags that
  claim predicates check published tokens against;
* an n-of-n exclusive-or sharing of the computation output, produced by a
  trusted dealer that stands in for the secure evaluation of the augmented
  function;
* a threshold-2 (degree-1 polynomial) sharing of the aggregator's refund
  witness ``w``, used by the equal-compensation variant.

Randomness is drawn from ``random.Random(seed)`` so that every dealer output
is reproducible from its seed. That is fine for a simulator and wrong for
anything that has to keep secrets.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass
from functools import reduce
from typing import Callable, Optional, Sequence

K_BITS = 128
# Mersenne prime 2^521 - 1; comfortably holds w || d_w (2k bits).
FIELD_PRIME = 2**521 - 1
FIELD_BYTES = (FIELD_PRIME.bit_length() + 7) // 8


class PubNMSSError(Exception):
    pass


class BadRandomnessLength(PubNMSSError):
    pass


class TooFewParties(PubNMSSError):
    pass


class MissingToken(PubNMSSError):
    pass


class InvalidToken(PubNMSSError):
    def __init__(self, index: int):
        super().__init__(f"token {index} does not match its tag")
        self.index = index


class DuplicateIndex(PubNMSSError):
    pass


class InvalidShare(PubNMSSError):
    def __init__(self, index: int):
        super().__init__(f"threshold share {index} does not match its commitment")
        self.index = index


class ComWMismatch(PubNMSSError):
    pass


@dataclass(frozen=True)
class Tag:
    commitment: bytes

    def hex(self) -> str:
        return self.commitment.hex()


@dataclass(frozen=True)
class TokenShare:
    share: bytes
    randomness: bytes


@dataclass(frozen=True)
class ThresholdShare:
    """S_i: a point of the degree-1 polynomial plus its decommitment."""

    index: int
    value: int
    decommitment: bytes

    def value_bytes(self) -> bytes:
        return self.value.to_bytes(FIELD_BYTES, "big")


@dataclass(frozen=True)
class WOpening:
    w: bytes
    randomness: bytes


@dataclass(frozen=True)
class EquivExtras:
    shares: tuple[ThresholdShare, ...]
    commitments: tuple[Tag, ...]
    com_w: Tag
    w: bytes
    w_randomness: bytes

    @property
    def opening(self) -> WOpening:
        return WOpening(self.w, self.w_randomness)


@dataclass(frozen=True)
class DealerOutput:
    tokens: tuple[TokenShare, ...]
    tags: tuple[Tag, ...]
    extras: Optional[EquivExtras] = None

    @property
    def n(self) -> int:
        return len(self.tokens)

    def token(self, index: int) -> TokenShare:
        """Token of party ``index`` (1-based)."""
        return self.tokens[index - 1]

    def tag(self, index: int) -> Tag:
        return self.tags[index - 1]

    def public(self) -> "PublicState":
        if self.extras is None:
            return PublicState(self.tags)
        return PublicState(self.tags, self.extras.commitments, self.extras.com_w)


@dataclass(frozen=True)
class PublicState:
    """Everything a verifier needs: tags, share commitments and com_w."""

    tags: tuple[Tag, ...]
    share_commitments: tuple[Tag, ...] = ()
    com_w: Optional[Tag] = None


def _digest(message: bytes, randomness: bytes, digest_bits: int) -> bytes:
    h = hashlib.sha256()
    h.update(len(message).to_bytes(4, "big"))
    h.update(message)
    h.update(randomness)
    out = h.digest()
    if digest_bits >= 256:
        return out
    nbytes = (digest_bits + 7) // 8
    cut = int.from_bytes(out[:nbytes], "big") >> (nbytes * 8 - digest_bits)
    return cut.to_bytes(nbytes, "big")


def commit(message: bytes, randomness: bytes, *, k_bits: int = K_BITS,
           digest_bits: int = 256) -> Tag:
    """Hash commitment to ``message`` under ``randomness``.

    ``digest_bits`` below 256 truncates the digest; that only exists so tests
    can brute-force collisions at toy sizes.
    """
    if len(randomness) * 8 != k_bits:
        raise BadRandomnessLength(
            f"randomness is {len(randomness) * 8} bits, expected {k_bits}")
    return Tag(_digest(message, randomness, digest_bits))


def verify_token(tag: Tag, token: TokenShare, *, digest_bits: int = 256) -> bool:
    if not isinstance(token, TokenShare):
        return False
    return _digest(token.share, token.randomness, digest_bits) == tag.commitment


def verify_share(commitment: Tag, share: ThresholdShare) -> bool:
    if not isinstance(share, ThresholdShare):
        return False
    return _digest(share.value_bytes(), share.decommitment, 256) == commitment.commitment


def verify_opening(com_w: Tag, opening: WOpening) -> bool:
    if not isinstance(opening, WOpening):
        return False
    return _digest(opening.w, opening.randomness, 256) == com_w.commitment


def _xor(a: bytes, b: bytes) -> bytes:
    return bytes(x ^ y for x, y in zip(a, b))


def xor_shares(secret: bytes, n: int, rng: random.Random) -> list[bytes]:
    """n-of-n sharing: n-1 uniform pads plus the masked secret."""
    pads = [rng.randbytes(len(secret)) for _ in range(n - 1)]
    last = reduce(_xor, pads, secret)
    return pads + [last]


def split_threshold2(secret: int, count: int, rng: random.Random,
                     prime: int = FIELD_PRIME) -> list[tuple[int, int]]:
    """Evaluate secret + a*x at x = 1..count."""
    if not 0 <= secret < prime:
        raise ValueError("secret outside the field")
    slope = rng.randrange(prime)
    return [(x, (secret + slope * x) % prime) for x in range(1, count + 1)]


def interpolate_at_zero(p1: tuple[int, int], p2: tuple[int, int],
                        prime: int = FIELD_PRIME) -> int:
    (x1, y1), (x2, y2) = p1, p2
    if x1 == x2:
        raise DuplicateIndex(f"both shares have index {x1}")
    # Lagrange at 0: y1 * x2/(x2-x1) + y2 * x1/(x1-x2)
    l1 = x2 * pow(x2 - x1, -1, prime)
    l2 = x1 * pow(x1 - x2, -1, prime)
    return (y1 * l1 + y2 * l2) % prime


def deal_output(secret: bytes, n: int, with_equiv_extras: bool = False, *,
                seed: Optional[int] = None, k_bits: int = K_BITS) -> DealerOutput:
    if n < 2:
        raise TooFewParties(f"need at least 2 parties, got {n}")
    if not secret:
        raise ValueError("secret must be nonempty")
    rng = random.Random(seed)
    kbytes = k_bits // 8

    tokens, tags = [], []
    for share in xor_shares(secret, n, rng):
        r = rng.randbytes(kbytes)
        tokens.append(TokenShare(share, r))
        tags.append(commit(share, r, k_bits=k_bits))

    extras = None
    if with_equiv_extras:
        w = rng.randbytes(kbytes)
        d_w = rng.randbytes(kbytes)
        packed = int.from_bytes(w + d_w, "big")
        shares, comms = [], []
        for x, y in split_threshold2(packed, max(n - 2, 0), rng):
            d = rng.randbytes(kbytes)
            s = ThresholdShare(x, y, d)
            shares.append(s)
            comms.append(commit(s.value_bytes(), d, k_bits=k_bits))
        extras = EquivExtras(tuple(shares), tuple(comms),
                             commit(w, d_w, k_bits=k_bits), w, d_w)
    return DealerOutput(tuple(tokens), tuple(tags), extras)


def reconstruct_output(tokens: Sequence[Optional[TokenShare]],
                       tags: Sequence[Tag]) -> bytes:
    if len(tokens) != len(tags):
        raise MissingToken(f"{len(tokens)} tokens for {len(tags)} tags")
    for i, (tok, tag) in enumerate(zip(tokens, tags), start=1):
        if tok is None:
            raise MissingToken(f"token {i} missing")
        if not verify_token(tag, tok):
            raise InvalidToken(i)
    return reduce(_xor, (t.share for t in tokens))


def reconstruct_w_opening(shares: Sequence[ThresholdShare],
                          commitments: Sequence[Tag], com_w: Tag) -> WOpening:
    if len(shares) != 2:
        raise ValueError("exactly two shares are needed")
    a, b = shares
    if a.index == b.index:
        raise DuplicateIndex(f"both shares have index {a.index}")
    for s in (a, b):
        if not 1 <= s.index <= len(commitments) or not verify_share(commitments[s.index - 1], s):
            raise InvalidShare(s.index)
    packed = interpolate_at_zero((a.index, a.value), (b.index, b.value))
    kbytes = K_BITS // 8
    raw = packed.to_bytes(2 * kbytes, "big") if packed < 2 ** (16 * kbytes) else b""
    opening = WOpening(raw[:kbytes], raw[kbytes:])
    if not raw or not verify_opening(com_w, opening):
        raise ComWMismatch("interpolated value does not open com_w")
    return opening


def reconstruct_w(shares: Sequence[ThresholdShare], commitments: Sequence[Tag],
                  com_w: Tag) -> bytes:
    return reconstruct_w_opening(shares, commitments, com_w).w


def xor_inputs(inputs: Sequence[bytes]) -> bytes:
    return reduce(_xor, inputs)


def augmented_function(inputs: Sequence[bytes], *, with_equiv_extras: bool = False,
                       f: Callable[[Sequence[bytes]], bytes] = xor_inputs,
                       seed: Optional[int] = None) -> DealerOutput:
    """Trusted-dealer evaluation: compute f(inputs) and share the result."""
    return deal_output(f(inputs), len(inputs), with_equiv_extras, seed=seed)


# Hex layout: each field is hex; tokens as "share:randomness", shares as
# "index:value:decommitment". Round-trips through dealer_from_dict.
def dealer_to_dict(out: DealerOutput) -> dict:
    d = {
        "tokens": [f"{t.share.hex()}:{t.randomness.hex()}" for t in out.tokens],
        "tags": [t.hex() for t in out.tags],
    }
    if out.extras is not None:
        e = out.extras
        d["extras"] = {
            "shares": [f"{s.index}:{s.value:x}:{s.decommitment.hex()}" for s in e.shares],
            "commitments": [c.hex() for c in e.commitments],
            "com_w": e.com_w.hex(),
            "w": e.w.hex(),
            "w_randomness": e.w_randomness.hex(),
        }
    return d


def dealer_from_dict(d: dict) -> DealerOutput:
    tokens = []
    for item in d["tokens"]:
        sh, r = item.split(":")
        tokens.append(TokenShare(bytes.fromhex(sh), bytes.fromhex(r)))
    tags = tuple(Tag(bytes.fromhex(t)) for t in d["tags"])
    extras = None
    if "extras" in d:
        e = d["extras"]
        shares = []
        for item in e["shares"]:
            idx, val, dec = item.split(":")
            shares.append(ThresholdShare(int(idx), int(val, 16), bytes.fromhex(dec)))
        extras = EquivExtras(tuple(shares),
                             tuple(Tag(bytes.fromhex(c)) for c in e["commitments"]),
                             Tag(bytes.fromhex(e["com_w"])),
                             bytes.fromhex(e["w"]), bytes.fromhex(e["w_randomness"]))
    return DealerOutput(tuple(tokens), tags, extras)
