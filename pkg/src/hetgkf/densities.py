"""EC densities rho_j(F, u) and the expected Euler characteristic of excursion sets.

The expected EC of ``M ∩ f^{-1}[u, inf)`` with ``f = F(y_1..y_K)`` is
``sum_j L_j(M) rho_j(F, u)`` where the L_j are taken in the base metric and
the heterogeneity enters only through ``rho_j = (2 pi)^{-j/2} M_j^D``.
"""

from dataclasses import dataclass
from math import factorial

import numpy as np
from scipy import integrate

from .geometry import lkc, scale_lkc
from .special import binom, elementary_symmetric, gaussian_pdf_nd, gaussian_sf, hermite_prob
from .tube import DomainSet, HeterogeneityMatrix, QuadConfig, integrate_chart


@dataclass
class EcDensityVector:
    level: float
    values: np.ndarray

    def __getitem__(self, j):
        return self.values[j]

    def __len__(self):
        return len(self.values)


def rho_gaussian(j, u):
    """EC density of a unit-variance Gaussian field with unit second spectral moment."""
    if j < 0:
        raise ValueError("EC density order must be nonnegative")
    if j == 0:
        return float(gaussian_sf(u))
    return float((2 * np.pi) ** (-(j + 1) / 2) * hermite_prob(j - 1, u) * np.exp(-u * u / 2))


def restricted_trace_power(hess, grad, d, m):
    """Trace of the m-th power of the double form built from -D Hess F on grad-F-perp.

    The operator ``-Pi D Hess F Pi / |D^{1/2} grad F|`` uses the projector Pi
    onto vectors D^{-1}-orthogonal to D grad F; it is self-adjoint for that
    inner product, and its nonzero spectrum lives on the (K-1)-dim subspace.
    For a double form built from one bilinear form, Tr(gamma^m) = m! e_m.
    """
    if m == 0:
        return 1.0
    lam = d.diag
    dg = lam * grad
    proj = np.eye(len(grad)) - np.outer(dg, grad) / (grad @ dg)
    op = -proj @ (lam[:, None] * hess) @ proj / np.sqrt(grad @ dg)
    eig = np.linalg.eigvals(op).real
    return factorial(m) * elementary_symmetric(eig, m)


def _density_integrand(f, d, j):
    lam = d.diag

    def func(x, t, chart):
        g = f.grad(x)
        h = f.hess(x)
        gn = np.linalg.norm(g)
        half = np.sqrt(np.sum(lam * g * g))
        full = np.linalg.norm(lam * g)
        weight = half / gn
        ratio = full / half
        outward = -float(x @ (lam * g)) / full
        acc = 0.0
        for m in range(j):
            p = j - 1 - m
            acc += (
                (-1) ** p * binom(j - 1, m) * ratio ** p * hermite_prob(p, outward)
                * restricted_trace_power(h, g, d, m)
            )
        area = 1.0 if t is None else float(chart.area_element(t))
        return np.array([weight * acc * gaussian_pdf_nd(x) * area])

    return func


def rho_via_levelset(f, d, u, j, quad=None):
    """EC density rho_j(F, u) as an integral over the level set F^{-1}(u).

    Sign conventions follow the conditional mean of -Hess f: the Hermite
    argument is measured along the outward normal -grad F / |grad F| and the
    restricted trace power is of -D Hess F.
    """
    if d.K != f.K:
        raise ValueError("D and F disagree on the number of components")
    quad = quad or QuadConfig()
    if f.kind == "sum_of_squares" and u <= 0:
        return 1.0 if j == 0 else 0.0
    k = DomainSet(f, u, quad)
    if j == 0:
        return k.gaussian_measure()
    integrand = _density_integrand(f, d, j)
    val, _ = integrate_chart(k.chart, lambda x, t: integrand(x, t, k.chart), quad)
    return float((2 * np.pi) ** (-j / 2) * val[0])


def chi2_s2_m2(radius, lambda1, lambda2, quad=None):
    """M_2 of {x1^2 + x2^2 >= radius^2} under D = diag(lambda1, lambda2).

    Polar reduction of the boundary integral: the circle is parametrized by
    angle, the Gaussian weight is constant on it, and each factor (normal
    weight, normal stretch, Hermite argument, curvature of the D-frame) is
    written explicitly in theta.
    """
    if radius <= 0 or lambda1 <= 0 or lambda2 <= 0:
        raise ValueError("radius and lambdas must be positive")
    quad = quad or QuadConfig()
    r = float(radius)

    def pieces(theta):
        c2, s2 = np.cos(theta) ** 2, np.sin(theta) ** 2
        weight = np.sqrt(lambda1 * c2 + lambda2 * s2)
        stretch = np.sqrt(lambda1 ** 2 * c2 + lambda2 ** 2 * s2) / weight
        arg = -r * weight ** 2 / (weight * stretch)
        curvature = -1.0 / (r * (s2 / lambda1 + c2 / lambda2) * weight)
        return weight, stretch, arg, curvature

    def hermite_term(theta):
        w, st, arg, _ = pieces(theta)
        return -w * st * hermite_prob(1, arg) * r

    def curvature_term(theta):
        w, _, _, a11 = pieces(theta)
        return w * a11 * r

    opts = dict(epsabs=quad.epsabs, epsrel=quad.epsrel, limit=quad.limit)
    i1, _ = integrate.quad(hermite_term, 0.0, 2 * np.pi, **opts)
    i2, _ = integrate.quad(curvature_term, 0.0, 2 * np.pi, **opts)
    return np.exp(-r * r / 2) / (2 * np.pi) * (i1 + i2)


def ec_densities(f, d, u, n, quad=None):
    """(rho_0..rho_n) at level u, using closed forms where they exist."""
    quad = quad or QuadConfig()
    vals = np.zeros(n + 1)
    for j in range(n + 1):
        if f.kind == "coordinate":
            vals[j] = d.lambdas[0] ** (j / 2) * rho_gaussian(j, u)
        elif f.kind == "sum_of_squares" and f.K == 2 and j == 2 and u > 0:
            vals[j] = chi2_s2_m2(np.sqrt(u), *d.lambdas, quad) / (2 * np.pi)
        else:
            vals[j] = rho_via_levelset(f, d, u, j, quad)
    return EcDensityVector(float(u), vals)


def expected_ec(m, f, d, u, nu=1.0, quad=None):
    """E chi(M ∩ y^{-1} K) = sum_j L_j(M) rho_j(F, u), K = F^{-1}[u, inf).

    ``nu`` rescales the spatial metric (L_j -> nu^{j/2} L_j).
    """
    if not isinstance(d, HeterogeneityMatrix):
        d = HeterogeneityMatrix(d)
    if m.dim > 2:
        raise ValueError("manifolds of dimension above 2 are not supported")
    lk = scale_lkc(lkc(m), nu)
    rho = ec_densities(f, d, u, m.dim, quad)
    return float(sum(lk[j] * rho[j] for j in range(m.dim + 1) if lk[j] != 0.0))
