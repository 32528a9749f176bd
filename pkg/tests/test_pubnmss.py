import itertools
import random

import pytest
from hypothesis import given, strategies as st

from oracles import line_secrets, xor_completion_counts, xor_completion_counts_naive
from penaltysim.pubnmss import (BadRandomnessLength, ComWMismatch, DuplicateIndex, InvalidShare,
                                InvalidToken, MissingToken, Tag, ThresholdShare, TokenShare,
                                TooFewParties, augmented_function, commit, deal_output,
                                dealer_from_dict, dealer_to_dict, interpolate_at_zero,
                                reconstruct_output, reconstruct_w, reconstruct_w_opening,
                                split_threshold2, verify_opening, verify_share, verify_token)
from penaltysim.settlement import SecretShare, TokenConjunction, WitnessW

R16 = bytes(16)


def flip(b: bytes, bit: int) -> bytes:
    out = bytearray(b)
    out[bit // 8] ^= 1 << (bit % 8)
    return bytes(out)


def test_commit_deterministic():
    assert commit(b"m", R16) == commit(b"m", R16)


def test_commit_randomness_length():
    with pytest.raises(BadRandomnessLength):
        commit(b"m", bytes(15))
    assert commit(b"m", bytes(4), k_bits=32)


def test_commit_distinct_randomness():
    rng = random.Random(3)
    for _ in range(1000):
        r1, r2 = rng.randbytes(16), rng.randbytes(16)
        if r1 != r2:
            assert commit(b"msg", r1) != commit(b"msg", r2)


def test_verify_token_accepts_own_pair():
    assert verify_token(commit(b"share", R16), TokenShare(b"share", R16))
    assert not verify_token(commit(b"share", R16), "not a token")


def test_bit_flips_rejected():
    d = deal_output(b"sixteen byte out", 4, seed=11)
    for tag, tok in zip(d.tags, d.tokens):
        assert verify_token(tag, tok)
        for bit in range(len(tok.share) * 8):
            assert not verify_token(tag, TokenShare(flip(tok.share, bit), tok.randomness))
        for bit in range(len(tok.randomness) * 8):
            assert not verify_token(tag, TokenShare(tok.share, flip(tok.randomness, bit)))


def test_toy_hash_collisions_are_the_only_forgeries():
    # all 2^8 one-byte shares under one randomness and a 16-bit digest
    tags = {s: commit(bytes([s]), R16, digest_bits=16) for s in range(256)}
    colliding = {(a, b) for a in range(256) for b in range(256)
                 if a != b and tags[a] == tags[b]}
    accepted = {(a, b) for a in range(256) for b in range(256)
                if a != b and verify_token(tags[a], TokenShare(bytes([b]), R16), digest_bits=16)}
    assert accepted == colliding
    # at 16 bits over 256 messages a handful of collisions at most is expected
    assert len(colliding) <= 20


def test_deal_rejects_small_n():
    with pytest.raises(TooFewParties):
        deal_output(b"s", 1)
    with pytest.raises(ValueError):
        deal_output(b"", 3)


@given(st.binary(min_size=1, max_size=24), st.integers(2, 7), st.integers(0, 2**32))
def test_roundtrip(secret, n, seed):
    d = deal_output(secret, n, seed=seed)
    assert reconstruct_output(list(d.tokens), list(d.tags)) == secret
    assert all(verify_token(t, k) for t, k in zip(d.tags, d.tokens))


def test_reconstruct_errors():
    d = deal_output(b"abc", 3, seed=0)
    toks = list(d.tokens)
    with pytest.raises(MissingToken):
        reconstruct_output(toks[:2], list(d.tags))
    with pytest.raises(MissingToken):
        reconstruct_output([toks[0], None, toks[2]], list(d.tags))
    bad = TokenShare(flip(toks[1].share, 0), toks[1].randomness)
    with pytest.raises(InvalidToken) as e:
        reconstruct_output([toks[0], bad, toks[2]], list(d.tags))
    assert e.value.index == 2


def test_completion_counter_matches_nested_loops():
    for observed, missing in (([], 1), ([7], 2), ([1, 200, 33], 2), ([5, 6], 0)):
        assert xor_completion_counts(observed, missing) == \
            xor_completion_counts_naive(observed, missing)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_strict_subsets_hide_the_secret(n):
    for seed in range(4):
        d = deal_output(bytes([seed * 37 % 256]), n, seed=seed)
        shares = [t.share[0] for t in d.tokens]
        for k in range(n):
            for subset in itertools.combinations(range(n), k):
                counts = xor_completion_counts([shares[i] for i in subset], n - k)
                assert len(set(counts)) == 1
                assert counts[0] == 256 ** (n - k - 1)


def test_threshold_pairs_at_n6():
    d = deal_output(b"out", 6, with_equiv_extras=True, seed=5)
    e = d.extras
    assert len(e.shares) == 4
    for a, b in itertools.combinations(e.shares, 2):
        w = reconstruct_w([a, b], e.commitments, e.com_w)
        assert w == e.w
        assert commit(w, e.w_randomness) == e.com_w


def test_threshold_pair_n5():
    d = deal_output(b"out", 5, with_equiv_extras=True, seed=2)
    e = d.extras
    assert len(e.shares) == 3
    assert reconstruct_w([e.shares[0], e.shares[2]], e.commitments, e.com_w) == e.w


def test_threshold_errors():
    d = deal_output(b"out", 5, with_equiv_extras=True, seed=2)
    e = d.extras
    with pytest.raises(DuplicateIndex):
        reconstruct_w([e.shares[0], e.shares[0]], e.commitments, e.com_w)
    wrong = ThresholdShare(2, e.shares[1].value + 1, e.shares[1].decommitment)
    with pytest.raises(InvalidShare):
        reconstruct_w([e.shares[0], wrong], e.commitments, e.com_w)
    with pytest.raises(ComWMismatch):
        reconstruct_w([e.shares[0], e.shares[1]], e.commitments, Tag(bytes(32)))
    with pytest.raises(ValueError):
        reconstruct_w_opening([e.shares[0]], e.commitments, e.com_w)


def test_single_share_leaves_every_secret_possible():
    prime = 131071  # 2^17 - 1
    (x, y), = split_threshold2(4242, 1, random.Random(0), prime)
    assert len(line_secrets(x, y, prime)) == prime


@given(st.integers(0, 131070), st.integers(0, 2**32), st.integers(2, 5))
def test_toy_field_interpolation(secret, seed, count):
    prime = 131071
    pts = split_threshold2(secret, count, random.Random(seed), prime)
    for a, b in itertools.combinations(pts, 2):
        assert interpolate_at_zero(a, b, prime) == secret


def test_serialized_tags_decide_alike():
    d = deal_output(b"public", 5, with_equiv_extras=True, seed=9)
    d2 = dealer_from_dict(dealer_to_dict(d))
    assert d2 == d
    pub1, pub2 = d.public(), d2.public()
    e = d.extras
    cases = [
        (TokenConjunction((1, 2)), {1: d.token(1), 2: d.token(2)}),
        (TokenConjunction((1, 2)), {1: d.token(1), 2: d.token(3)}),
        (SecretShare(2), e.shares[1]),
        (SecretShare(2), e.shares[0]),
        (WitnessW(), e.opening),
        (WitnessW(), e.shares[0]),
    ]
    for pred, wit in cases:
        assert pred.evaluate(wit, pub1) == pred.evaluate(wit, pub2)
    assert [pred.evaluate(w, pub1) for pred, w in cases] == [True, False, True, False, True, False]


def test_share_and_opening_checks():
    d = deal_output(b"o", 4, with_equiv_extras=True, seed=1)
    e = d.extras
    assert all(verify_share(c, s) for c, s in zip(e.commitments, e.shares))
    assert verify_opening(e.com_w, e.opening)
    assert not verify_share(e.commitments[0], e.shares[1])


def test_augmented_function_xors_inputs():
    inputs = [b"\x01\x02", b"\x10\x20", b"\x00\xff"]
    d = augmented_function(inputs, seed=3)
    assert reconstruct_output(list(d.tokens), list(d.tags)) == b"\x11\xdd"
