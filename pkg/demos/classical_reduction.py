"""Classical EC densities recovered from the level-set integral.

With F(x) = x_1 and D = I the heterogeneous density reduces to the
familiar Gaussian-field densities. With D = diag(lambda, ...) it picks up
lambda^{j/2}, the same factor as rescaling the spatial metric.
"""

import numpy as np

from hetgkf import FunctionSpec, HeterogeneityMatrix, rho_gaussian, rho_via_levelset

f = FunctionSpec.coordinate(1)
print(" u   j   level-set        closed form")
for u in (-1.0, 0.0, 1.0, 2.0, 3.0):
    for j in range(4):
        a = rho_via_levelset(f, HeterogeneityMatrix.identity(1), u, j)
        print(f"{u:4.1f} {j}  {a: .10f}  {rho_gaussian(j, u): .10f}")

# two components, only the first enters F: lambda_2 is irrelevant
f2 = FunctionSpec.coordinate(2)
d = HeterogeneityMatrix([3.0, 0.2])
print("\n j  ratio to D = I   lambda_1^(j/2)")
for j in range(4):
    ratio = rho_via_levelset(f2, d, 1.7, j) / rho_gaussian(j, 1.7)
    print(f" {j}  {ratio:.12f}  {3.0 ** (j / 2):.12f}")
