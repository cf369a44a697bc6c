
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hetgkf.densities import chi2_s2_m2, ec_densities, expected_ec, restricted_trace_power, rho_gaussian, rho_via_levelset
from hetgkf.geometry import Manifold
from hetgkf.special import detr, gaussian_sf
from hetgkf.tube import DomainSet, FunctionSpec, HeterogeneityMatrix, gmf, shape_matrix

coord = FunctionSpec.coordinate
sos = FunctionSpec.sum_of_squares


def test_rho_gaussian_examples():
    assert rho_gaussian(0, 0.0) == 0.5
    for u in (-1.0, 0.5, 2.0):
        assert rho_gaussian(1, u) == pytest.approx(np.exp(-u * u / 2) / (2 * np.pi))
    assert rho_gaussian(2, 0.0) == 0.0
    with pytest.raises(ValueError):
        rho_gaussian(-1, 0.0)


@pytest.mark.parametrize("K", [1, 2])
def test_levelset_coordinate_scales_with_lambda(K):
    lam = [2.5, 0.4][:K]
    d = HeterogeneityMatrix(lam)
    for j in range(4):
        for u in (-0.7, 1.4):
            assert rho_via_levelset(coord(K), d, u, j) == pytest.approx(lam[0] ** (j / 2) * rho_gaussian(j, u), abs=1e-9)


def test_levelset_one_dimensional_point_mass():
    # K = 1 sum of squares: level set is {+-sqrt(u)}, j = 1 density is a two-point sum
    lam, u = 1.8, 0.9
    r = np.sqrt(u)
    val = rho_via_levelset(sos(1), HeterogeneityMatrix([lam]), u, 1)
    expected = (2 * np.pi) ** -0.5 * np.sqrt(lam) * 2 * np.exp(-u / 2) / np.sqrt(2 * np.pi)
    assert val == pytest.approx(expected, rel=1e-12)
    # independent route: derivative of the tube volume P(|y| >= r - sqrt(lam) eps) at eps = 0
    eps = 1e-5
    tube = 2 * gaussian_sf(r - np.sqrt(lam) * eps)
    assert (tube - 2 * gaussian_sf(r)) / eps / np.sqrt(2 * np.pi) == pytest.approx(val, rel=1e-4)


def test_levelset_sum_of_squares_matches_m2_over_2pi():
    r, l1, l2 = 1.3, 2.2, 0.9
    d = HeterogeneityMatrix([l1, l2])
    val = rho_via_levelset(sos(2), d, r * r, 2)
    assert val == pytest.approx(chi2_s2_m2(r, l1, l2) / (2 * np.pi), rel=1e-8)


def test_levelset_sum_of_squares_nonpositive_level():
    d = HeterogeneityMatrix([2, 1])
    assert rho_via_levelset(sos(2), d, 0.0, 0) == 1.0
    assert rho_via_levelset(sos(2), d, -1.0, 2) == 0.0


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(0.3, 2.0))
def test_restricted_trace_matches_shape_matrix_route(seed, r):
    # two independent routes to m! detr_m(A): projector spectrum vs D^{-1}-orthonormal frame
    rng = np.random.default_rng(seed)
    lam = rng.uniform(0.3, 3.0, size=3)
    d = HeterogeneityMatrix(lam)
    k = DomainSet(sos(3), r * r)
    z = rng.normal(size=3)
    z *= r / np.linalg.norm(z)
    a = shape_matrix(z, k, d)
    g, h = k.f.grad(z), k.f.hess(z)
    for m in range(3):
        frame_route = math.factorial(m) * detr(m, a) if m <= 2 else 0.0
        assert restricted_trace_power(h, g, d, m) == pytest.approx(frame_route, rel=1e-9, abs=1e-12)


def test_chi2_s2_m2_equal_lambdas():
    r, lam = 1.4, 0.8
    assert chi2_s2_m2(r, lam, lam) == pytest.approx(lam * (r * r - 1) * np.exp(-r * r / 2), rel=1e-10)


def test_chi2_s2_m2_generic_matches_gmf():
    k = DomainSet(sos(2), 1.5 ** 2)
    g = gmf(k, HeterogeneityMatrix([2.0, 0.5]), 2)
    val = chi2_s2_m2(1.5, 2.0, 0.5)
    assert val == pytest.approx(g[2], abs=1e-5)
    assert val == pytest.approx(0.5884326, abs=1e-7)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.3, 3), st.floats(0.2, 5), st.floats(0.2, 5))
def test_chi2_s2_m2_swap(r, l1, l2):
    assert chi2_s2_m2(r, l1, l2) == pytest.approx(chi2_s2_m2(r, l2, l1), rel=1e-9, abs=1e-14)


def test_chi2_s2_m2_rejects_bad_input():
    with pytest.raises(ValueError):
        chi2_s2_m2(0.0, 1.0, 1.0)


def test_chi2_m2_is_second_tube_coefficient():
    # independent route: second difference of Monte Carlo tube volumes is too noisy, so use
    # the exact tube of a disk complement in the isotropic case: P(|y| >= r - eps)
    from scipy import stats

    r, eps = 1.2, 1e-3
    vol = lambda e: stats.chi2.sf((r - e) ** 2, 2)
    second = (vol(eps) - 2 * vol(0) + vol(-eps)) / eps ** 2
    assert chi2_s2_m2(r, 1.0, 1.0) == pytest.approx(second, rel=1e-5)


def test_expected_ec_sphere_gaussian():
    lam, u = 3.0, 1.0
    val = expected_ec(Manifold.sphere2(), coord(1), HeterogeneityMatrix([lam]), u)
    expected = 2 * gaussian_sf(u) + 4 * np.pi * lam * (2 * np.pi) ** -1.5 * u * np.exp(-u * u / 2)
    assert val == pytest.approx(expected, rel=1e-12)


def test_expected_ec_limits():
    d = HeterogeneityMatrix([5.0])
    assert expected_ec(Manifold.sphere2(), coord(1), d, -40.0) == pytest.approx(2.0)
    assert expected_ec(Manifold.sphere2(), coord(1), d, 40.0) == pytest.approx(0.0, abs=1e-300)


def test_expected_ec_sphere_chi2_assembly():
    r, l1, l2 = 1.6, 40.0, 20.0
    val = expected_ec(Manifold.sphere2(), sos(2), HeterogeneityMatrix([l1, l2]), r * r)
    assert val == pytest.approx(2 * np.exp(-r * r / 2) + 2 * chi2_s2_m2(r, l1, l2), rel=1e-10)


def test_expected_ec_affine_in_lkc():
    d = HeterogeneityMatrix([2.0])
    u = 1.5
    small = expected_ec(Manifold.sphere2(1.0), coord(1), d, u)
    big = expected_ec(Manifold.sphere2(np.sqrt(2.0)), coord(1), d, u)
    l0 = 2 * gaussian_sf(u)
    assert big - l0 == pytest.approx(2 * (small - l0), rel=1e-13)


def test_expected_ec_nu_scaling():
    # metric nu*g on the sphere is the same as lambda -> nu*lambda for a coordinate F
    u = 0.8
    a = expected_ec(Manifold.sphere2(), coord(1), HeterogeneityMatrix([2.0]), u, nu=3.0)
    b = expected_ec(Manifold.sphere2(), coord(1), HeterogeneityMatrix([6.0]), u)
    assert a == pytest.approx(b, rel=1e-13)


def test_rho0_monotone():
    d = HeterogeneityMatrix([2.0, 1.0])
    levels = np.linspace(0.2, 8, 12)
    r0 = [ec_densities(sos(2), d, u, 0)[0] for u in levels]
    assert np.all(np.diff(r0) <= 0)
    assert all(0 <= v <= 1 for v in r0)


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        rho_via_levelset(sos(2), HeterogeneityMatrix([1.0, 1.0, 1.0]), 1.0, 1)
