import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special

from hetgkf.fields import (
    FourierSpectrum,
    PowerSpectrum,
    SphereSynthesizer,
    gradient_covariance_check,
    real_sph_harm_basis,
    spectral_moment,
    synthesize_circle,
    synthesize_sphere,
)
from hetgkf.mesh import circle_grid, cotangent_laplacian, icosphere


@pytest.fixture(scope="module")
def grid4():
    return icosphere(4)


# ------------------------------------------------------------ spectra

@settings(max_examples=50)
@given(st.lists(st.floats(0, 10), min_size=3, max_size=30).filter(lambda c: sum(c) > 1e-3))
def test_normalized_spectrum_has_unit_variance(c):
    s = PowerSpectrum(c).normalized()
    ell = np.arange(len(c))
    assert abs(np.sum((2 * ell + 1) * s.c_ell) / (4 * np.pi) - 1) <= 1e-10


def test_spectrum_csv_roundtrip(tmp_path):
    s = PowerSpectrum.gaussian_beam(12, 4.0)
    p = tmp_path / "s.csv"
    s.to_csv(p)
    assert p.read_text().splitlines()[0] == "ell,c_ell"
    np.testing.assert_array_equal(PowerSpectrum.from_csv(p).c_ell, s.c_ell)


def test_spectrum_csv_bad_header(tmp_path):
    p = tmp_path / "s.csv"
    p.write_text("l,value\n0,1\n")
    with pytest.raises(ValueError):
        PowerSpectrum.from_csv(p)


def test_spectrum_rejects_negative():
    with pytest.raises(ValueError):
        PowerSpectrum([1.0, -0.1])


def test_spectral_moment_examples():
    assert spectral_moment(PowerSpectrum.single_ell(0)) == 0.0
    for ell in (1, 4, 9):
        assert spectral_moment(PowerSpectrum.single_ell(ell)) == pytest.approx(ell * (ell + 1) / 2)


# ------------------------------------------------------------ harmonic basis

def test_real_basis_orthonormal_by_exact_quadrature():
    lmax = 8
    x, w = special.roots_legendre(lmax + 2)
    phi = np.arange(2 * lmax + 2) * 2 * np.pi / (2 * lmax + 2)
    ct, ph = np.meshgrid(x, phi, indexing="ij")
    st_ = np.sqrt(1 - ct ** 2)
    pts = np.c_[(st_ * np.cos(ph)).ravel(), (st_ * np.sin(ph)).ravel(), ct.ravel()]
    wts = np.repeat(w, len(phi)) * (2 * np.pi / len(phi))
    b = real_sph_harm_basis(lmax, pts)
    gram = b.T @ (b * wts[:, None])
    np.testing.assert_allclose(gram, np.eye(b.shape[1]), atol=1e-12)


def test_real_basis_addition_theorem():
    # sum_m zeta_lm(x)^2 = (2l+1)/(4 pi) at every point
    pts = icosphere(2).vertices
    b = real_sph_harm_basis(6, pts)
    for ell in range(7):
        np.testing.assert_allclose((b[:, ell * ell:(ell + 1) ** 2] ** 2).sum(axis=1), (2 * ell + 1) / (4 * np.pi),
                                   rtol=1e-12)


def test_laplacian_eigenrelation(grid6):
    lap = cotangent_laplacian(grid6)
    b = real_sph_harm_basis(4, grid6.vertices)
    rng = np.random.default_rng(0)
    for ell in range(1, 5):
        y = b[:, ell * ell:(ell + 1) ** 2] @ rng.normal(size=2 * ell + 1)
        assert np.linalg.norm(lap @ y + ell * (ell + 1) * y) / np.linalg.norm(y) <= 0.05


# ------------------------------------------------------------ synthesis

def test_monopole_is_constant(grid4):
    s = synthesize_sphere([PowerSpectrum.single_ell(0, lmax=2)], grid4, seed=5)
    v = s.values[:, 0]
    assert np.ptp(v) <= 1e-12
    draw = np.random.default_rng(np.random.SeedSequence(5)).standard_normal((9, 1))[0, 0]
    # a_00 has variance C_0 = 4 pi and zeta_00 = (4 pi)^{-1/2}
    assert v[0] == pytest.approx(draw * np.sqrt(4 * np.pi) / np.sqrt(4 * np.pi), rel=1e-12)


def test_deterministic_given_seed(grid4):
    sp = [PowerSpectrum.gaussian_beam(15, 5.0)]
    a = synthesize_sphere(sp, grid4, seed=3)
    b = synthesize_sphere(sp, grid4, seed=3)
    assert a.values.tobytes() == b.values.tobytes()
    c = synthesize_sphere(sp, grid4, seed=4)
    assert not np.array_equal(a.values, c.values)


def test_synthesis_many_matches_single(synth6, beam_pair):
    many = synth6.synthesize_many(list(beam_pair), 11, [3, 7])
    one = synth6.synthesize(list(beam_pair), 11, 7).values
    np.testing.assert_allclose(many[1], one, rtol=1e-12, atol=1e-12)


def test_unnormalized_spectrum_rejected(grid4):
    with pytest.raises(ValueError):
        synthesize_sphere([PowerSpectrum([0.0, 1.0, 1.0])], grid4, seed=0)


def test_nyquist_warning():
    g = icosphere(3)
    with pytest.warns(UserWarning, match="resolvable"):
        SphereSynthesizer(g, 30)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        SphereSynthesizer(g, 10)


@pytest.fixture(scope="module")
def replications(synth6, beam_pair):
    return synth6.synthesize_many(list(beam_pair), 2024, range(200))


def test_vertex_moments(replications):
    vals = replications[:, ::400, :]
    r = vals.shape[0]
    mean_se = vals.std(axis=0, ddof=1) / np.sqrt(r)
    assert np.all(np.abs(vals.mean(axis=0)) <= 5 * mean_se)
    sq = vals ** 2
    var_se = sq.std(axis=0, ddof=1) / np.sqrt(r)
    assert np.all(np.abs(sq.mean(axis=0) - 1) <= 5 * var_se)
    cross = vals[:, :, 0] * vals[:, :, 1]
    cross_se = cross.std(axis=0, ddof=1) / np.sqrt(r)
    assert np.all(np.abs(cross.mean(axis=0)) <= 5 * cross_se)


def test_covariance_depends_only_on_separation(replications, grid6, beam_pair):
    rng = np.random.default_rng(1)
    i = rng.integers(grid6.n_vertices, size=4000)
    j = rng.integers(grid6.n_vertices, size=4000)
    cosang = np.clip(np.sum(grid6.vertices[i] * grid6.vertices[j], axis=1), -1, 1)
    ang = np.arccos(cosang)
    bins = np.linspace(0, np.pi, 13)
    which = np.digitize(ang, bins) - 1
    c = beam_pair[0].c_ell
    ell = np.arange(c.size)
    y = replications[:, :, 0]
    prod = y[:, i] * y[:, j]
    for b in range(12):
        sel = which == b
        if sel.sum() < 20:
            continue
        theory = np.mean([np.sum((2 * ell + 1) * c * special.eval_legendre(ell, x)) / (4 * np.pi)
                          for x in cosang[sel]])
        per_rep = prod[:, sel].mean(axis=1)
        se = per_rep.std(ddof=1) / np.sqrt(len(per_rep))
        assert abs(per_rep.mean() - theory) <= 5 * se + 1e-3


# ------------------------------------------------------------ gradient covariance oracle

def test_gradient_oracle_confirms_spectral_moment(replications, grid6, beam_pair):
    gc = gradient_covariance_check(replications, grid6)
    blocks = gc.blocks()
    for k, s in enumerate(beam_pair):
        lam = spectral_moment(s)
        diag = np.diag(blocks[k, :, k, :])
        assert np.all(np.abs(diag / lam - 1) <= 0.03)


def test_gradient_oracle_identical_spectra(synth6, grid6):
    s = PowerSpectrum.gaussian_beam(20, 6.0)
    vals = synth6.synthesize_many([s, s], 77, range(150))
    gc = gradient_covariance_check(vals, grid6)
    lam = spectral_moment(s)
    off = gc.cov[:2, 2:]
    assert np.all(np.abs(off) <= 5 * gc.std_error[:2, 2:])
    for k in range(2):
        blk = gc.blocks()[k, :, k, :]
        assert np.all(np.abs(np.diag(blk) / lam - 1) <= 0.05)
        assert abs(blk[0, 1]) <= 5 * gc.std_error[2 * k, 2 * k + 1]


def test_gradient_oracle_monopole_block(synth6, grid6):
    mono = PowerSpectrum.single_ell(0, lmax=2)
    s = PowerSpectrum.gaussian_beam(20, 6.0)
    vals = synth6.synthesize_many([mono, s], 5, range(100))
    gc = gradient_covariance_check(vals, grid6)
    np.testing.assert_allclose(gc.blocks()[0, :, 0, :], 0.0, atol=1e-20)


def test_gradient_oracle_ratio_four(synth6, grid6):
    # mix l = 14, 15 to get lambda = 112 = 4 * lambda(l = 7)
    c = np.zeros(21)
    c[15] = 7 / 15 * 4 * np.pi / 31
    c[14] = 8 / 15 * 4 * np.pi / 29
    s1 = PowerSpectrum(c)
    s2 = PowerSpectrum.single_ell(7, lmax=20)
    ratio = spectral_moment(s1) / spectral_moment(s2)
    assert ratio == pytest.approx(4.0, rel=1e-12)
    vals = synth6.synthesize_many([s1, s2], 8, range(150))
    gc = gradient_covariance_check(vals, grid6)
    b = gc.blocks()
    est = np.trace(b[0, :, 0, :]) / np.trace(b[1, :, 1, :])
    assert est == pytest.approx(ratio, rel=0.05)


def test_gradient_oracle_needs_replications(grid4):
    with pytest.raises(ValueError):
        gradient_covariance_check(np.zeros((50, grid4.n_vertices, 1)), grid4)


# ------------------------------------------------------------ circle fields

def test_circle_field_moments():
    c = 3.0
    spec = FourierSpectrum([1.0, 0.5, 0.25, 0.1])
    grid = circle_grid(600, c)
    lam = spec.spectral_moment(c)
    vals = np.stack([synthesize_circle([spec], grid, c, seed=4, index=i).values[:, 0] for i in range(400)])
    h = c / 600
    slope = (np.roll(vals, -1, axis=1) - np.roll(vals, 1, axis=1)) / (2 * h)
    assert vals.var() == pytest.approx(1.0, rel=0.1)
    assert (slope ** 2).mean() == pytest.approx(lam, rel=0.1)
