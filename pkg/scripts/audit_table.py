"""Print rounds, calls and compensation verdicts for every variant and n."""
import argparse
import time

from penaltysim.engine import audit, render_json, render_text

ROWS = [("BK2", 2)] + [(v, n) for v in ("BKn", "Ours", "OursEquiv", "MergedTau34")
                       for n in range(3, 7)] + [("OursReduced(1)", 6)]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--q", type=int, default=1)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--json", help="also write the rows here")
    args = ap.parse_args()
    t0 = time.perf_counter()
    reports = [audit(v, n, args.q, jobs=args.jobs) for v, n in ROWS]
    print(render_text(reports))
    print(f"{sum(r.executions for r in reports)} executions in {time.perf_counter() - t0:.1f}s")
    if args.json:
        with open(args.json, "w") as fh:
            fh.write(render_json(reports))


if __name__ == "__main__":
    main()
