"""Why polynomial families cannot be large and take few values per column."""
import numpy as np

from dcsparse import PolyFamily, lagrange_interpolate, pigeonhole_refine
from dcsparse.polyrefute import PreconditionError, exhaustive_line_search, random_instance

print("Interpolating (1, 2), (2, 3), (3, 6):", lagrange_interpolate([(1, 2), (2, 3), (3, 6)]))

rng = np.random.default_rng(1)
fam, cols = random_instance(rng, 2, 3)
chain = pigeonhole_refine(fam, cols, 3)
print(f"\n{len(fam)} quadratics, 3 values at each of columns {cols}")
print("  refinement sizes:", chain.sizes, " bound m^(n+1) =", chain.bound)

print("\nOne member too many breaks the per-column value budget")
extra = PolyFamily(2, fam.members + [np.array([100.0, 1.0, 1.0])])
try:
    pigeonhole_refine(extra, cols, 3)
except PreconditionError as err:
    print("  ", err)

res = exhaustive_line_search()
print(f"\nInteger lines in [-5, 5]^2 with 2 values at x = 1, 2: largest family {res['max_family']}")
print("  witness:", res["witness"])
