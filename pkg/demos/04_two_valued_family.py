"""A function flat on a level-m Cantor set, windowed into a two-valued family."""
import numpy as np

from dcsparse import WeightSequence, build_flat_on_cantor, family_member, two_value_check
from dcsparse.wetzel import (ANALYTIC_TRIPLES, distinct_family, equalizer_demo,
                             family_windows, separation_audit)

spacer = "_" * 60
g = build_flat_on_cantor(WeightSequence.gevrey(2), 6)
print(f"level {g.level}: {len(g.cantor.gaps)} gaps, {len(g.cantor.endpoints)} endpoints")
print(f"reported envelope: beta = {g.beta}, B = {g.B:.4f}")
print("g(0), g(1/2), g(2) =", float(g(0.0)), float(g(0.5)), float(g(2.0)))

windows = family_windows(g)
fam = distinct_family(g)
print(f"\n{len(windows)} windows [a, b] give {len(fam)} different functions")

f = family_member(g, *windows[500])
print(f"window {windows[500][0]} .. {windows[500][1]}: f(0.5) = {float(f(0.5)):.3e}")

x = np.linspace(-0.05, 1.05, 10_000)
rep = two_value_check(fam, x)
print("\nvalues per grid point at most", rep.max_distinct, "->", "pass" if rep.passed else "fail")
print("separation audit:", separation_audit(fam, x, pairs=100)["passed"])

print(spacer)
print("\nFor analytic functions the coincidence set is discrete instead")
for name in ANALYTIC_TRIPLES:
    r = equalizer_demo(*ANALYTIC_TRIPLES[name])
    print(f"  {name:14s} points {np.round(r.points, 4)}  degenerate {r.degenerate_pairs}"
          f"  min separation {r.min_separation:.4f}")
