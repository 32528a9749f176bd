"""Compare the script-level CRG deposit against its ideal ledger, and probe weakened scripts."""
import time

from penaltysim.bitcoin import MUTATIONS, equivalence_suite, late_claim_gap, steals

t0 = time.perf_counter()
res = equivalence_suite()
bad = [r.behavior.label() for r in res if not r.passed]
print(f"{len(res) - len(bad)}/{len(res)} behaviours match the ideal ledger "
      f"({time.perf_counter() - t0:.2f}s)")
for label in bad:
    print("  mismatch:", label)
print("intact script steals:", steals(None, None) or "none")
for m in MUTATIONS:
    print(f"{m}: {steals(None, m)}")
real, ideal = late_claim_gap()
print(f"claim one round after the deadline: real {real}, ideal {ideal}")
