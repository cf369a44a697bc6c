"""Empirical Cov(grad y) for two independent components.

The estimate should be block diagonal, diag(lambda_1, lambda_2) kron I_2,
with lambda computed from each angular spectrum.
"""

import numpy as np

from hetgkf import PowerSpectrum, SphereSynthesizer, gradient_covariance_check, icosphere, spectral_moment

grid = icosphere(6)
spectra = [PowerSpectrum.gaussian_beam(20, 8.0), PowerSpectrum.gaussian_beam(20, 5.3)]
synth = SphereSynthesizer(grid, 20)
vals = synth.synthesize_many(spectra, seed=3, indices=range(200))
gc = gradient_covariance_check(vals, grid)
np.set_printoptions(precision=3, suppress=True)
print("estimate:\n", gc.cov)
print("standard errors:\n", gc.std_error)
print("D kron I:\n", np.kron(np.diag([spectral_moment(s) for s in spectra]), np.eye(2)))
