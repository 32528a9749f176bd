"""Independent reference computations used by several test modules."""

from __future__ import annotations

import itertools
from fractions import Fraction


def xor_completion_counts(observed: list[int], missing: int) -> list[int]:
    """For one-byte xor sharing: how many fillings of ``missing`` unknown
    shares give each secret value, given the observed share bytes.

    Counted by dynamic programming over the unknown shares one at a time,
    which enumerates the same completions as a nested loop would.
    """
    start = 0
    for b in observed:
        start ^= b
    counts = [0] * 256
    counts[start] = 1
    for _ in range(missing):
        nxt = [0] * 256
        for v, c in enumerate(counts):
            if c:
                for b in range(256):
                    nxt[v ^ b] += c
        counts = nxt
    return counts


def xor_completion_counts_naive(observed: list[int], missing: int) -> list[int]:
    counts = [0] * 256
    base = 0
    for b in observed:
        base ^= b
    for fill in itertools.product(range(256), repeat=missing):
        v = base
        for b in fill:
            v ^= b
        counts[v] += 1
    return counts


def line_secrets(x: int, y: int, prime: int) -> set[int]:
    """Every constant term of a line through (x, y) over GF(prime)."""
    return {(y - a * x) % prime for a in range(prime)}


def smallest_refill(n: int, limit: int = 1000) -> int:
    for x in range(1, limit):
        if (n - 2) * x > (n - 3) * (x + 1):
            return x
    raise AssertionError("no solution below limit")


def aggregator_net(n: int, x: int, q: int) -> int:
    """Honest aggregator's net when x middle parties skip their step-3 claims,
    summed deposit by deposit: it claims every step-4 deposit, pays the
    claimers' step-3 deposits, and gets its other deposits back."""
    received = (n - 2) * (n - 2) * q
    paid = (n - 2 - x) * (n - 1) * q
    return received - paid


def equal_split(n: int, x: int, q: int) -> tuple[int, Fraction]:
    """Pool held by the aggregator and the n-2-x claimers (each claimer nets
    q) and the level amount when spread over those n-1-x parties."""
    pool = aggregator_net(n, x, q) + (n - 2 - x) * q
    return pool, Fraction(pool, n - 1 - x)
