"""Weight sequences, their log-convex minorants and the Carleman sum."""
import numpy as np

from dcsparse import WeightSequence, carleman_partial_sum, classify, log_convexify

spacer = "_" * 60

print("Closed-form families and their verdicts")
for seq in (WeightSequence.factorial(), WeightSequence.gevrey(1.5),
            WeightSequence.gevrey(2), WeightSequence.power(2)):
    v = classify(seq)
    print(f"  {seq.name:12s} {v.verdict:20s} sum to K={v.K}: {v.partial_sum:.6f}")

print(spacer)
print("\nThe factorial sum is the harmonic number, so it keeps growing")
fact = log_convexify(WeightSequence.factorial(10**4))
for K in (10, 100, 1000, 10**4):
    print(f"  K = {K:6d}  sum = {carleman_partial_sum(fact, K):.6f}")

print("\nThe (k!)^2 sum settles at pi^2/6 = %.6f" % (np.pi**2 / 6))
g2 = log_convexify(WeightSequence.gevrey(2, 10**6))
for K in (10, 1000, 10**6):
    print(f"  K = {K:7d}  sum = {carleman_partial_sum(g2, K):.6f}")

print(spacer)
print("\nA sequence that is not log-convex gets replaced by its minorant")
raw = WeightSequence.custom([1, 10, 1, 5, 30, 400])
conv = log_convexify(raw)
print("  M        =", np.round(raw.prefix, 3))
print("  M'       =", np.round(conv.minorant, 3))
print("  vertices =", conv.hull_vertices)
