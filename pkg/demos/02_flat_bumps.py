"""A certified flat bump and the transition built from it."""
from fractions import Fraction

import numpy as np

from dcsparse import WeightSequence, make_bump, make_transition
from dcsparse.flat import strictly_increasing

spacer = "_" * 60
seq = WeightSequence.gevrey(2)

print("Bump on (0, 4) with eps = 1/2 for the weights (k!)^2")
b = make_bump((0, 4), 0.5, seq)
print("  widths a_j      :", [f"{float(a):.4g}" for a in b.widths])
print("  amplitude       :", b.amplitude)
print("  certificate ok  :", b.certificate_holds())

x = np.linspace(0, 4, 10_001)
print("\n  k   sampled max |b^(k)|   eps^k M_k")
for k in range(b.certified_order + 1):
    print(f"  {k}   {np.max(np.abs(b(x, k))):.4e}          {b.bound_table[k]:.4e}")

print("\nThe two derivative routes agree")
for k in (3, 6, 8):
    gap = np.max(np.abs(b(x, k, method="telescoping") - b(x, k, method="direct")))
    print(f"  k = {k}: max difference {gap:.2e}")

print(spacer)
print("\nTransition s on [0, 1/4] with flatness 1/5")
t = make_transition(Fraction(1, 4), 5, seq)
xs = np.linspace(0, 0.25, 10_000)
print("  s(0)          :", float(t(0.0)))
print("  s(1/4) = y    :", t.end_value)
print("  rescale A     :", t.rescale)
print("  increasing    :", strictly_increasing(t, xs))
print("  near the ends :", t.lower(1e-3), t.upper(0.25 - 1e-3))
