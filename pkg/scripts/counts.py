"""Honest-run rounds, calls and largest single deposit for n = 3..N."""
import sys

from penaltysim.engine import honest_counts
from penaltysim.protocols import build, max_deposit, minimal_refill_factor

top = int(sys.argv[1]) if len(sys.argv) > 1 else 10
print(" n  BKn(r,c)   Ours(r,c)   maxdep BKn  maxdep Ours  refill")
for n in range(3, top + 1):
    print(f"{n:2d}  {str(honest_counts('BKn', n)):9s}  {str(honest_counts('Ours', n)):10s}  "
          f"{max_deposit(build('BKn', n, 1), n):10d}  {max_deposit(build('Ours', n, 1), n - 1):11d}"
          f"  {minimal_refill_factor(n):6d}")
