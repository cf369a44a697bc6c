"""Expected Euler characteristic of excursion sets of Gaussian-related fields
built from independent components with unequal second spectral moments."""

__version__ = "0.1.0"

from .densities import EcDensityVector, chi2_s2_m2, ec_densities, expected_ec, rho_gaussian, rho_via_levelset
from .fields import (
    FieldSample,
    FourierSpectrum,
    GradientCovariance,
    PowerSpectrum,
    SphereSynthesizer,
    gradient_covariance_check,
    real_sph_harm_basis,
    spectral_moment,
    synthesize_circle,
    synthesize_sphere,
)
from .geometry import LkcVector, Manifold, lkc, scale_lkc
from .mesh import Mesh, circle_grid, cotangent_laplacian, icosphere
from .special import detr, gaussian_cdf, gaussian_pdf, gaussian_sf, hermite_prob
from .topology import EcEstimate, ExcursionMask, euler_characteristic, euler_curve, excursion_mask, mc_expected_ec
from .tube import (
    DomainSet,
    FunctionSpec,
    GmfVector,
    HeterogeneityMatrix,
    ProjectionError,
    QuadConfig,
    critical_radius,
    gmf,
    mc_tube_volume,
    project_onto_K,
    shape_matrix,
    tube_expansion,
    tube_membership,
)
