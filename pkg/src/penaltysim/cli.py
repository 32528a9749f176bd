"""Command line: run one scenario, audit variants, list variants, show a graph.

Scenario files are YAML mappings; any flag given on the command line wins
over the file. Example::

    variant: Ours          # or "OursReduced(1)"
    n: 4
    q: 1
    d: 0
    corrupted: [1, 4]
    schedule: fig3_abort   # a named schedule, or a mapping with "actions"
    seed: 0
    output:
      trace: out/trace.jsonl
      result: out/result.json
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import yaml

from .adversary import (NAMED_SCHEDULES, AdversarySchedule, MalformedSchedule, default_dealer,
                        execute, follow_honest, named_schedule)
from .engine import BoundExceeded, audit, render_json, render_text, verdict
from .protocols import VARIANT_TAGS, ProtocolVariant, UnsupportedArity, build


class ConfigInvalid(ValueError):
    pass


@dataclass
class ScenarioConfig:
    variant: str = "Ours"
    n: int = 4
    q: int = 1
    d: int = 0
    corrupted: Optional[list] = None
    schedule: object = "follow_honest"
    seed: int = 0
    trace: Optional[str] = None
    result: Optional[str] = None
    extra: dict = field(default_factory=dict)

    def validate(self) -> ProtocolVariant:
        try:
            v = ProtocolVariant.parse(str(self.variant))
            v.check_arity(int(self.n))
        except (ValueError, UnsupportedArity) as e:
            raise ConfigInvalid(str(e)) from None
        if not isinstance(self.q, int) or self.q < 1:
            raise ConfigInvalid("q must be a positive integer")
        if self.d != 0:
            raise ConfigInvalid("only d = 0 is supported; the safety deposit is always returned")
        if self.corrupted is not None and not all(
                isinstance(p, int) and 1 <= p <= self.n for p in self.corrupted):
            raise ConfigInvalid(f"corrupted parties must lie in 1..{self.n}")
        return v


_KEYS = {"variant", "l", "n", "q", "d", "corrupted", "schedule", "seed", "output"}


def load_config(path: Optional[str]) -> ScenarioConfig:
    if path is None:
        return ScenarioConfig()
    try:
        raw = yaml.safe_load(Path(path).read_text()) or {}
    except (OSError, yaml.YAMLError) as e:
        raise ConfigInvalid(f"cannot read {path}: {e}") from None
    if not isinstance(raw, dict):
        raise ConfigInvalid("config must be a mapping")
    unknown = set(raw) - _KEYS
    if unknown:
        raise ConfigInvalid(f"unknown keys: {', '.join(sorted(unknown))}")
    cfg = ScenarioConfig()
    variant = raw.get("variant", cfg.variant)
    if "l" in raw:
        variant = f"{variant}({raw['l']})"
    cfg.variant = variant
    for k in ("n", "q", "d", "seed"):
        if k in raw:
            cfg.__dict__[k] = raw[k]
    cfg.corrupted = raw.get("corrupted")
    cfg.schedule = raw.get("schedule", cfg.schedule)
    out = raw.get("output") or {}
    cfg.trace, cfg.result = out.get("trace"), out.get("result")
    return cfg


def _parse_set(text: str) -> list[int]:
    if not text.strip():
        return []
    try:
        return [int(x) for x in text.split(",")]
    except ValueError:
        raise ConfigInvalid(f"bad party list {text!r}") from None


def _parse_range(text: str) -> list[int]:
    try:
        if ".." in text:
            lo, hi = text.split("..")
            return list(range(int(lo), int(hi) + 1))
        return [int(x) for x in text.split(",")]
    except ValueError:
        raise ConfigInvalid(f"bad range {text!r}") from None


def resolve_schedule(cfg: ScenarioConfig, graph) -> AdversarySchedule:
    spec = cfg.schedule
    try:
        if isinstance(spec, str):
            sched = named_schedule(spec, graph)
        elif isinstance(spec, dict):
            sched = AdversarySchedule.from_dict(spec)
        else:
            raise ConfigInvalid("schedule must be a name or a mapping")
        if cfg.corrupted is not None:
            sched = AdversarySchedule(frozenset(cfg.corrupted), sched.actions, sched.name)
        sched.validate(graph)
    except (MalformedSchedule, KeyError, ValueError) as e:
        if isinstance(e, ConfigInvalid):
            raise
        raise ConfigInvalid(f"schedule: {e}") from None
    return sched


def run_scenario(cfg: ScenarioConfig, out=None) -> int:
    variant = cfg.validate()
    graph = build(variant, cfg.n, cfg.q)
    sched = resolve_schedule(cfg, graph)
    outcome = execute(graph, sched, default_dealer(graph, cfg.seed))
    v = verdict(outcome, cfg.q)
    lines = outcome.trace_lines()
    if cfg.trace:
        Path(cfg.trace).parent.mkdir(parents=True, exist_ok=True)
        Path(cfg.trace).write_text("".join(line + "\n" for line in lines))
    result = {
        "variant": str(variant), "n": cfg.n, "q": cfg.q, "schedule": sched.to_dict(),
        "net_balances": {str(p): b for p, b in outcome.net_balances.items()},
        "rounds_used": outcome.rounds_used, "calls_used": outcome.calls_used,
        "learned": {"adversary": outcome.learned.adversary_learned,
                    "honest": {str(p): f for p, f in outcome.learned.honest_learned.items()}},
        "verdict": v.to_dict(), "ok": v.ok,
    }
    text = json.dumps(result, indent=2, sort_keys=True, ensure_ascii=False)
    if cfg.result:
        Path(cfg.result).parent.mkdir(parents=True, exist_ok=True)
        Path(cfg.result).write_text(text + "\n")
    print(text, file=out or sys.stdout)
    return 0 if v.ok else 1


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.variant:
        cfg.variant = args.variant
    for name in ("n", "q", "seed"):
        val = getattr(args, name)
        if val is not None:
            setattr(cfg, name, val)
    if args.corrupted is not None:
        cfg.corrupted = _parse_set(args.corrupted)
    if args.schedule:
        cfg.schedule = args.schedule
    if args.trace:
        cfg.trace = args.trace
    if args.result:
        cfg.result = args.result
    return run_scenario(cfg)


def _cmd_audit(args) -> int:
    reports = []
    for n in _parse_range(args.n):
        try:
            reports.append(audit(args.variant, n, args.q, jobs=args.jobs, bound=args.bound))
        except (ValueError, UnsupportedArity) as e:
            if isinstance(e, BoundExceeded):
                raise
            raise ConfigInvalid(str(e)) from None
    text = render_text(reports)
    print(text, end="")
    if args.json:
        Path(args.json).parent.mkdir(parents=True, exist_ok=True)
        Path(args.json).write_text(render_json(reports) + "\n")
    bad = any(r.failures_a or r.failures_b_star or r.conservation_failures for r in reports)
    return 1 if bad else 0


def _cmd_list(args) -> int:
    for tag in VARIANT_TAGS:
        print(tag + ("(l)" if tag == "OursReduced" else ""))
    return 0


def _cmd_show(args) -> int:
    try:
        graph = build(args.variant, args.n, args.q)
    except (ValueError, UnsupportedArity) as e:
        raise ConfigInvalid(str(e)) from None
    print(graph.listing(), end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="penaltysim")
    sub = p.add_subparsers(dest="cmd", required=True)

    r = sub.add_parser("run", help="execute one scenario")
    r.add_argument("--config")
    r.add_argument("--variant")
    r.add_argument("--n", type=int)
    r.add_argument("--q", type=int)
    r.add_argument("--seed", type=int)
    r.add_argument("--corrupted", help="comma-separated party ids")
    r.add_argument("--schedule", help="one of: " + ", ".join(NAMED_SCHEDULES))
    r.add_argument("--trace", help="write the event trace (JSON lines) here")
    r.add_argument("--result", help="write balances and verdict here")
    r.set_defaults(func=_cmd_run)

    a = sub.add_parser("audit", help="exhaustive audit over corrupted sets and schedules")
    a.add_argument("--variant", required=True)
    a.add_argument("--n", required=True, help="e.g. 5 or 3..6")
    a.add_argument("--q", type=int, default=1)
    a.add_argument("--jobs", type=int, default=1)
    a.add_argument("--bound", type=int, default=6)
    a.add_argument("--json", help="write the machine-readable summary here")
    a.set_defaults(func=_cmd_audit)

    sub.add_parser("list-variants").set_defaults(func=_cmd_list)

    s = sub.add_parser("show-graph", help="print the deposit listing")
    s.add_argument("--variant", required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--q", type=int, default=1)
    s.set_defaults(func=_cmd_show)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigInvalid, BoundExceeded) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
