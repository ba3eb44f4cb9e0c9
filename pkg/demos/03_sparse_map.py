"""The increasing map h_P through a point, built from a shared atom registry."""
import numpy as np

from dcsparse import AtomRegistry, WeightSequence, build_map, eval_with_provenance, inverse_eval
from dcsparse.sparse import derivative_audit, piece_envelopes, strictly_increasing

spacer = "_" * 60
reg = AtomRegistry(WeightSequence.gevrey(2))
h = build_map((0.3, -0.7), reg, depth=40)
print(h)
print("atoms admitted so far:", len(reg))

print("\nValues carry the atom they came from")
for u in (0.3, 0.2999, 0.25, 1.0, -4.0):
    v, prov = eval_with_provenance(h, u)
    print(f"  h({u:7}) = {float(v): .17g}   from {prov}")

print("\nNear P the values differ from y_P by less than one ulp of y_P")
v, _ = eval_with_provenance(h, 0.3 - 2.0**-30)
print("  y_P - h(x_P - 2^-30) =", float(h.y_P - v))

print(spacer)
u = np.linspace(-4.7, 5.3, 100_001)
print("\nstrictly increasing on 1e5 points:", strictly_increasing(h, u))
audit = derivative_audit(h)
print("max ||h^(k)|| / M_k for k = 1..8 :", f"{audit['max_ratio_to_M']:.3e}")
print("first |h'| piece envelopes       :", " ".join(f"{e:.2e}" for e in piece_envelopes(h, 1)[:6]))

print("\nInverse evaluation")
x, prov = inverse_eval(h, -0.7000001)
print(f"  h^-1(-0.7000001) = {x:.15f} via atom {prov}")
print("  the unit-width atoms beyond the core rise by only y(1, 1) =", float(reg.y(1, 1)))

print(spacer)
print("\nA second point one step away reuses the first map's atoms")
P2 = (h.x_P + 1, h.y_P + reg.y(1, 1))
h2 = build_map(P2, reg, depth=40)
print("  registry size after both maps:", len(reg))
print("  shared extension atom        :", h2.left.extension(2).index == h.left.extension(1).index)
