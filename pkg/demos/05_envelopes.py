"""Fitting ||f^(k)|| <= beta B^k M_k to measured derivative norms."""
import numpy as np

from dcsparse import WeightSequence, check_membership, make_bump, measure_norms, minimal_beta
from dcsparse.envelope import ANALYTIC, extend_low_orders

fact = WeightSequence.factorial(30)

print("sin on [0, 2 pi]: all derivative norms are 1")
p = measure_norms(ANALYTIC["sin"], (0, 2 * np.pi), 10, density=20_001)
print("  norms     :", np.round(p.norms, 6))
print("  converged :", p.converged)
for B in (0.5, 1.0, 2.0):
    beta = minimal_beta(p, fact, B)
    print(f"  B = {B}: least beta = {beta:.4g}, slack {check_membership(p, fact, beta, B).slack:.1e}")

print("\nA bump's measured norms against its own certificate")
b = make_bump((0, 1), 0.5, WeightSequence.gevrey(3))
pb = measure_norms(b, (0, 1), b.certified_order)
print("  measured / certified:", np.round(pb.norms / b.analytic_bounds(), 4))

print("\nRaising beta to cover the low orders")
d = fact.prefix[:8].copy()
d[0] = 5.0
print("  beta for k >= 1 is 1; after covering k = 0:", extend_low_orders(d, fact, 1, 1.0, 1.0))
