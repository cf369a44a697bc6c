"""Gaussian volume of an ellipsoidal tube against its two-term expansion.

K is the complement of the disk of radius 1.2 and the structuring
element is {w : w^T D^{-1} w <= eps^2} with D = diag(2, 1). The error of
M_0 + eps M_1 + eps^2/2 M_2 should shrink like eps^3 until it sinks
below the Monte Carlo standard error, which happens near eps = 0.1.
"""

import numpy as np

from hetgkf import DomainSet, FunctionSpec, HeterogeneityMatrix, critical_radius, gmf, mc_tube_volume, tube_expansion

d = HeterogeneityMatrix([2.0, 1.0])
k = DomainSet(FunctionSpec.sum_of_squares(2), 1.2 ** 2)
g = gmf(k, d, 2)
print("GMFs:", g.values, "critical radius:", critical_radius(k, d))

eps = np.array([0.4, 0.2, 0.1, 0.05])
est = mc_tube_volume(k, d, eps, 1_000_000, seed=1)
prev = None
for e, p, se in zip(eps, est.estimate, est.std_error):
    err = p - tube_expansion(g, e, 2)
    ratio = "" if prev is None else f"  ratio {abs(err) / abs(prev):.3f}"
    print(f"eps={e:<5} MC={p:.5f} +- {se:.5f}  expansion={tube_expansion(g, e, 2):.5f}  err={err:+.2e}{ratio}")
    prev = err
