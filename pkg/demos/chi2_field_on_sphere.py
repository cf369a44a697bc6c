"""Expected EC of a chi^2 field built from two unequally smooth components.

y_1 and y_2 are isotropic on S^2 with different angular spectra, so
lambda_1 != lambda_2. The excursion set of y_1^2 + y_2^2 is compared
with the heterogeneous formula, and with the homogeneous formula one
would get by pretending both components share the average lambda.
"""

import numpy as np

from hetgkf import FunctionSpec, HeterogeneityMatrix, Manifold, PowerSpectrum, expected_ec, mc_expected_ec, spectral_moment

s1 = PowerSpectrum.gaussian_beam(20, 8.0)
s2 = PowerSpectrum.gaussian_beam(20, 5.3)
lam = [spectral_moment(s1), spectral_moment(s2)]
print("lambda:", np.round(lam, 3))

f = FunctionSpec.sum_of_squares(2)
sphere = Manifold.sphere2()
levels = [0.5, 1.5, 3.0, 5.0, 8.0]
mc = mc_expected_ec(sphere, [s1, s2], f, levels, 1000, seed=7, mesh_level=6)
avg = HeterogeneityMatrix([np.mean(lam)] * 2)
print("   u     MC mean    SE    heterogeneous  averaged-lambda")
for u, m, se in mc.rows():
    het = expected_ec(sphere, f, HeterogeneityMatrix(lam), u)
    hom = expected_ec(sphere, f, avg, u)
    print(f"{u:5.1f} {m:10.3f} {se:6.3f} {het:12.3f} {hom:14.3f}")
