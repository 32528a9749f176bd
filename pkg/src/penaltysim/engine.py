"""Balance-level checkers, compensation arithmetic and the exhaustive audit.

Compensation is the final net balance of a party. The checkers:

* (A): no honest party ends below zero;
* (B*): if the coalition learned the output while some honest party did
  not, every honest party ends with at least q;
* (B-equal): (B*), and all honest parties end with the same amount.
"""

from __future__ import annotations

import itertools
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional

from .adversary import (ExecutionOutcome, LearnedOutputFlag, default_dealer,
                        enumerate_outcomes, execute, follow_honest)
from .protocols import (DepositGraph, ProtocolVariant, build, call_count, chain_members,
                        max_deposit, round_count)

__all__ = [
    "ExecutionOutcome", "LearnedOutputFlag", "Check", "Verdict", "OutOfRange", "BoundExceeded",
    "check_condition_a", "check_condition_b_star", "check_condition_b_equal", "envelope",
    "check_refund_deterrence", "deterrence_audit", "refund_bound", "DeterrenceReport",
    "verdict", "aggregator_compensation", "equalize_suggestion", "Equalization", "audit",
    "AuditReport", "Failure", "canonical_set", "symmetry_classes", "triggered",
    "honest_counts", "render_text", "render_json",
]

DEFAULT_BOUND = 6


class OutOfRange(ValueError):
    pass


class BoundExceeded(ValueError):
    pass


@dataclass(frozen=True)
class Check:
    passed: bool
    offender: Optional[int] = None
    detail: str = ""

    def __bool__(self) -> bool:
        return self.passed


def _honest(outcome: ExecutionOutcome, honest) -> list[int]:
    return sorted(outcome.honest if honest is None else honest)


def check_condition_a(outcome: ExecutionOutcome, honest=None) -> Check:
    for p in _honest(outcome, honest):
        if outcome.net_balances[p] < 0:
            return Check(False, p, f"P{p} nets {outcome.net_balances[p]}")
    return Check(True)


def triggered(outcome: ExecutionOutcome) -> bool:
    fl = outcome.learned
    return fl.adversary_learned and not all(fl.honest_learned.values())


def check_condition_b_star(outcome: ExecutionOutcome, honest=None, q: int = 1) -> Check:
    if not triggered(outcome):
        return Check(True, detail="vacuous")
    for p in _honest(outcome, honest):
        if outcome.net_balances[p] < q:
            return Check(False, p, f"P{p} nets {outcome.net_balances[p]} < q={q}")
    return Check(True)


def check_condition_b_equal(outcome: ExecutionOutcome, honest=None, q: int = 1) -> Check:
    base = check_condition_b_star(outcome, honest, q)
    if not base or base.detail == "vacuous":
        return base
    parties = _honest(outcome, honest)
    amounts = {p: outcome.net_balances[p] for p in parties}
    lo = min(amounts.values(), default=0)
    for p in parties:
        if amounts[p] != lo:
            return Check(False, p, f"P{p} nets {amounts[p]} while the smallest is {lo}")
    return Check(True)


def envelope(outcome: ExecutionOutcome, honest=None, q: int = 1) -> str:
    """Which ideal outcome pattern the balances look like (descriptive only)."""
    parties = _honest(outcome, honest)
    fl = outcome.learned
    if all(fl.honest_learned.values()):
        return "output-to-all"
    if not fl.adversary_learned:
        return "abort-no-output"
    amounts = {outcome.net_balances[p] for p in parties}
    if len(amounts) <= 1:
        return "penalty-to-all-honest"
    return "extra-to-some-honest"


@dataclass(frozen=True)
class Verdict:
    condition_a: Check
    condition_b_star: Check
    condition_b_equal: Check
    envelope: str

    @property
    def ok(self) -> bool:
        return bool(self.condition_a) and bool(self.condition_b_star)

    def to_dict(self) -> dict:
        def c(x: Check):
            return {"passed": x.passed, "offender": x.offender, "detail": x.detail}
        return {"condition_a": c(self.condition_a), "condition_b_star": c(self.condition_b_star),
                "condition_b_equal": c(self.condition_b_equal), "envelope": self.envelope}


def verdict(outcome: ExecutionOutcome, q: int, honest=None) -> Verdict:
    return Verdict(check_condition_a(outcome, honest),
                   check_condition_b_star(outcome, honest, q),
                   check_condition_b_equal(outcome, honest, q),
                   envelope(outcome, honest, q))


def check_refund_deterrence(outcome: ExecutionOutcome, n: int, q: int = 1) -> Check:
    """What a corrupted aggregator gets for refunding two or more step-3 deposits.

    Applies only when the aggregator P_{n-1} is corrupted and refunded at
    least two step-3 deposits (so w became public). Then every honest party
    must end with exactly nq when the learned trigger fires, and once all
    n-2 w-deposits were claimed the aggregator must end at or below
    x(n-1)q - (n-2)(n-1)q, which is never positive.
    """
    agg = n - 1
    x = outcome.step3_refunds
    if agg not in outcome.corrupted or x < 2:
        return Check(True, detail="vacuous")
    if triggered(outcome):
        for p in sorted(outcome.honest):
            if outcome.net_balances[p] != n * q:
                return Check(False, p, f"P{p} nets {outcome.net_balances[p]}, expected {n * q}")
    if outcome.w_claims == n - 2:
        got = outcome.net_balances[agg]
        if got > 0:
            return Check(False, agg, f"P{agg} nets {got} > 0")
        bound = refund_bound(n, x, q)
        if got > bound:
            return Check(True, detail=f"above bound: P{agg} nets {got} > {bound}")
    return Check(True)


def refund_bound(n: int, x: int, q: int = 1) -> int:
    """x(n-1)q - (n-2)(n-1)q: refunds recovered minus every w-deposit paid out."""
    return (x - (n - 2)) * (n - 1) * q


# Compensation arithmetic -----------------------------------------------------

def aggregator_compensation(n: int, x: int, q: int) -> int:
    """P_{n-1}'s net when x middle parties abort at their step-3 deadline."""
    if not 1 <= x <= n - 2:
        raise OutOfRange(f"x must lie in 1..{n - 2}, got {x}")
    value = ((x - 1) * n + 2 - x) * q
    assert value == ((n - 2) ** 2 - (n - 2 - x) * (n - 1)) * q
    return value


@dataclass(frozen=True)
class Equalization:
    n: int
    x: int
    q: int
    total: int                 # everything the honest side holds after the aborts
    share: Fraction            # equal final amount per compensated party
    transfer: Fraction         # what P_{n-1} sends each claimer
    transfer_floor: int
    remainder: int             # extra kept by P_{n-1} after floor-rounded transfers
    recipients: int            # claimers receiving a transfer

    def final_amounts(self) -> tuple[int, list[int]]:
        """(P_{n-1}'s amount, claimers' amounts) after the rounded transfers."""
        agg = aggregator_compensation(self.n, self.x, self.q) - self.recipients * self.transfer_floor
        return agg, [self.q + self.transfer_floor] * self.recipients


def equalize_suggestion(n: int, x: int, q: int) -> Equalization:
    """Redistribution making P_{n-1} and the n-2-x claimers end level.

    The pool is (n-2)xq, split over n-1-x parties.
    """
    if not 2 <= x <= n - 2:
        raise OutOfRange(f"x must lie in 2..{n - 2}, got {x}")
    total = (n - 2) * x * q
    parties = n - 1 - x
    share = Fraction(total, parties)
    transfer = share - q
    recipients = n - 2 - x
    share_floor = total // parties
    agg_before = aggregator_compensation(n, x, q)
    assert agg_before + recipients * q == total
    return Equalization(n, x, q, total, share, transfer, share_floor - q,
                        total - parties * share_floor, recipients)


# Audit ---------------------------------------------------------------------

@dataclass
class Failure:
    corrupted: tuple
    condition: str
    offender: Optional[int]
    balances: dict
    schedule: dict
    trace: list


@dataclass
class AuditReport:
    variant: str
    n: int
    q: int
    rounds: int
    calls: int
    max_deposit: int
    max_depositor: int
    corrupted_sets: int = 0
    executions: int = 0
    failures_a: int = 0
    failures_b_star: int = 0
    failures_b_equal: int = 0
    triggered: int = 0
    conservation_failures: int = 0
    failures: list = field(default_factory=list)

    @property
    def equivalent(self) -> bool:
        return self.failures_b_equal == 0

    def summary(self) -> dict:
        return {
            "variant": self.variant, "n": self.n, "q": self.q, "rounds": self.rounds,
            "calls": self.calls, "max_deposit": self.max_deposit,
            "max_depositor": self.max_depositor, "corrupted_sets": self.corrupted_sets,
            "executions": self.executions, "triggered": self.triggered,
            "failures_a": self.failures_a, "failures_b_star": self.failures_b_star,
            "failures_b_equal": self.failures_b_equal,
            "conservation_failures": self.conservation_failures,
            "compensation": "equivalent" if self.equivalent else "non-equivalent",
        }


def _corrupted_sets(n: int) -> list[tuple[int, ...]]:
    return [c for k in range(0, n) for c in itertools.combinations(range(1, n + 1), k)]


def _blocks(graph: DepositGraph) -> list[list[int]]:
    """Party blocks that the variant treats interchangeably.

    Each block is a list of equal-length tuples; permuting the tuples of a
    block relabels parties without changing any honest behaviour.
    """
    tag, n = graph.variant.tag, graph.n
    if tag in ("Ours", "OursEquiv", "MergedTau34"):
        return [[(i,) for i in range(1, n - 1)]]
    if tag == "OursReduced":
        return [[tuple(c) for c in chain_members(n, graph.variant.l)]]
    return []


def canonical_set(graph: DepositGraph, corrupted) -> tuple[int, ...]:
    """Smallest relabelling of ``corrupted`` under the variant's symmetries."""
    c = set(corrupted)
    out = set(c)
    for block in _blocks(graph):
        members = {p for t in block for p in t}
        out -= members
        patterns = sorted((tuple(p in c for p in t) for t in block), reverse=True)
        for t, pat in zip(block, patterns):
            out |= {p for p, bit in zip(t, pat) if bit}
    return tuple(sorted(out))


def symmetry_classes(graph: DepositGraph, sets) -> list[tuple[tuple[int, ...], int]]:
    """Collapse corrupted sets to (representative, orbit size) pairs."""
    weights: dict = {}
    for c in sets:
        rep = canonical_set(graph, c)
        weights[rep] = weights.get(rep, 0) + 1
    return sorted(weights.items())


def _audit_one(args):
    variant, n, q, corrupted, keep = args
    graph = build(variant, n, q)
    dealer = default_dealer(graph)
    rows = []
    for out in enumerate_outcomes(graph, corrupted, dealer):
        v = verdict(out, q)
        fails = [name for name, chk in (("A", v.condition_a), ("B*", v.condition_b_star),
                                        ("B-equal", v.condition_b_equal)) if not chk]
        conserved = out.supply_ok and sum(out.net_balances.values()) == 0
        rec = None
        if fails and keep:
            chk = {"A": v.condition_a, "B*": v.condition_b_star, "B-equal": v.condition_b_equal}
            rec = [Failure(corrupted, f, chk[f].offender, out.net_balances,
                           out.schedule.to_dict(), out.trace_lines()) for f in fails]
        rows.append((fails, triggered(out), conserved, rec))
    return corrupted, rows


def audit(variant, n: int, q: int = 1, corrupted_sets: Optional[Iterable] = None, *,
          bound: int = DEFAULT_BOUND, jobs: int = 1, keep_failures: int = 20,
          symmetry: bool = True) -> AuditReport:
    """Exhaustive sweep over corrupted sets and coalition schedules.

    With ``symmetry`` on, only one corrupted set per relabelling orbit is
    explored and its counts are weighted by the orbit size; kept failure
    records always come from explored sets.
    """
    if isinstance(variant, str):
        variant = ProtocolVariant.parse(variant)
    if n > bound:
        raise BoundExceeded(f"n = {n} exceeds the exhaustive bound {bound}")
    graph = build(variant, n, q)
    sets = _corrupted_sets(n) if corrupted_sets is None else [tuple(sorted(c)) for c in corrupted_sets]
    deposits = {p: max_deposit(graph, p) for p in range(1, n + 1)}
    top = max(deposits, key=lambda p: (deposits[p], p))
    rep = AuditReport(str(variant), n, q, round_count(graph), call_count(graph),
                      deposits[top], top)
    if symmetry:
        classes = symmetry_classes(graph, sets)
    else:
        classes = [(c, 1) for c in sets]
    weight = dict(classes)
    tasks = [(str(variant), n, q, c, keep_failures > 0) for c, _ in classes]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_audit_one, tasks))
    else:
        results = [_audit_one(t) for t in tasks]
    # merge in corrupted-set order so the report is independent of scheduling
    for corrupted, rows in sorted(results):
        w = weight[corrupted]
        rep.corrupted_sets += w
        for fails, trig, conserved, recs in rows:
            rep.executions += w
            rep.triggered += w * trig
            rep.conservation_failures += w * (not conserved)
            rep.failures_a += w * ("A" in fails)
            rep.failures_b_star += w * ("B*" in fails)
            rep.failures_b_equal += w * ("B-equal" in fails)
            if recs and len(rep.failures) < keep_failures:
                rep.failures.extend(recs[: keep_failures - len(rep.failures)])
    return rep


@dataclass
class DeterrenceReport:
    n: int
    q: int
    corrupted_sets: int = 0
    executions: int = 0
    qualifying: int = 0
    above_bound: int = 0       # within <= 0 but above refund_bound
    conservation_failures: int = 0
    failures: list = field(default_factory=list)
    above_examples: list = field(default_factory=list)


def deterrence_audit(n: int, q: int = 1) -> DeterrenceReport:
    """Sweep every coalition holding the aggregator through check_refund_deterrence.

    Uses the "coalition" merge so that the aggregator's internal futures are
    all explored; the honest-only shortcuts of the main audit would drop some.
    """
    graph = build("OursEquiv", n, q)
    dealer = default_dealer(graph)
    rep = DeterrenceReport(n, q)
    sets = [c for c in _corrupted_sets(n) if n - 1 in c]
    for rep_set, w in symmetry_classes(graph, sets):
        rep.corrupted_sets += w
        for out in enumerate_outcomes(graph, rep_set, dealer, merge="coalition"):
            rep.executions += w
            if not (out.supply_ok and sum(out.net_balances.values()) == 0):
                rep.conservation_failures += w
            chk = check_refund_deterrence(out, n, q)
            if chk.detail != "vacuous":
                rep.qualifying += w
            if chk.detail.startswith("above bound"):
                rep.above_bound += w
                if len(rep.above_examples) < 5:
                    rep.above_examples.append((rep_set, chk.detail, out.net_balances,
                                               out.schedule.to_dict()))
            if not chk:
                rep.failures.append((rep_set, chk, out.net_balances, out.schedule.to_dict()))
    return rep


def honest_counts(variant, n: int, q: int = 1) -> tuple[int, int]:
    """(rounds_used, calls_used) of the all-honest run."""
    graph = build(variant, n, q)
    out = execute(graph, follow_honest(), default_dealer(graph))
    return out.rounds_used, out.calls_used


# Rendering -----------------------------------------------------------------

def render_text(reports: list[AuditReport]) -> str:
    head = f"{'variant':<16}{'n':>3}{'rounds':>8}{'calls':>7}{'max dep':>9}  " \
           f"{'execs':>7}{'A':>5}{'B*':>5}{'B=':>5}  compensation"
    lines = [head, "-" * len(head)]
    for r in reports:
        lines.append(f"{r.variant:<16}{r.n:>3}{r.rounds:>8}{r.calls:>7}"
                     f"{str(r.max_deposit // r.q) + 'q':>9}  {r.executions:>7}{r.failures_a:>5}"
                     f"{r.failures_b_star:>5}{r.failures_b_equal:>5}  "
                     f"{'equivalent' if r.equivalent else 'non-equivalent'}")
    return "\n".join(lines) + "\n"


def render_json(reports: list[AuditReport]) -> str:
    return json.dumps([r.summary() for r in reports], indent=2, sort_keys=True)
