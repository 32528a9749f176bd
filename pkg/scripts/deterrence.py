"""Search OursEquiv for executions where the aggregator refunds twice and check who gains."""
import argparse

from penaltysim.engine import deterrence_audit


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, nargs="+", default=[4, 5])
    ap.add_argument("--q", type=int, default=1)
    ap.add_argument("--show", type=int, default=3, help="violations to print per n")
    args = ap.parse_args()
    for n in args.n:
        rep = deterrence_audit(n, args.q)
        print(f"n={n}: {rep.executions} executions, {rep.qualifying} with two refunds, "
              f"{len(rep.failures)} violations")
        for corrupted, chk, balances, _ in rep.failures[:args.show]:
            print(f"  C={corrupted} offender=P{chk.offender}: {chk.detail} {balances}")


if __name__ == "__main__":
    main()
