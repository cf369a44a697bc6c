"""Ellipsoidal tubes around level-set domains and their Gaussian Minkowski functionals.

A domain is ``K = {x : F(x) >= u}`` in R^K. The heterogeneity matrix
``D = diag(lambda_1..lambda_K)`` shapes the structuring element
``{w : w^T D^{-1} w <= eps^2}``, and the Gaussian measure of the resulting
tube expands as ``sum_l eps^l / l! * M_l``.

Orientation: ``eta = -grad F / |grad F|`` is the outward unit normal of K
(it points to where F decreases). The shape matrix is the one whose
``det(I + eps A)`` is the Jacobian of the normal map onto the tube
boundary, so a convex K has A >= 0 and the complement of a disk of
radius r (D = I) has A = -1/r.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from math import factorial
from typing import Callable, Optional

import numpy as np
from scipy import integrate, optimize, stats

from .special import binom, detr, gaussian_pdf_nd, gaussian_sf, hermite_prob


class ProjectionError(RuntimeError):
    """The weighted projection onto K did not converge.

    ``sample`` holds the offending input point and ``trace`` the residual
    norm after each Newton iteration.
    """

    def __init__(self, message, sample=None, trace=None):
        super().__init__(message)
        self.sample = sample
        self.trace = trace


@dataclass(frozen=True)
class HeterogeneityMatrix:
    """D = diag(lambdas): per-component second spectral moments."""

    lambdas: tuple

    def __post_init__(self):
        lam = tuple(float(v) for v in np.atleast_1d(self.lambdas))
        if len(lam) < 1:
            raise ValueError("need at least one lambda")
        if any(not np.isfinite(v) or v <= 0 for v in lam):
            raise ValueError(f"lambdas must be positive and finite, got {lam}")
        object.__setattr__(self, "lambdas", lam)

    @classmethod
    def identity(cls, k):
        return cls((1.0,) * k)

    @property
    def K(self):
        return len(self.lambdas)

    @property
    def diag(self):
        return np.array(self.lambdas)

    def matrix(self):
        return np.diag(self.lambdas)

    def swapped(self, i=0, j=1):
        lam = list(self.lambdas)
        lam[i], lam[j] = lam[j], lam[i]
        return HeterogeneityMatrix(tuple(lam))


@dataclass(frozen=True)
class QuadConfig:
    """Tolerances for boundary quadrature.

    ``radius`` truncates unbounded charts (hyperplanes) where the Gaussian
    weight is negligible.
    """

    epsabs: float = 1e-10
    epsrel: float = 1e-10
    limit: int = 400
    radius: float = 8.0

    def __post_init__(self):
        if self.epsabs <= 0 or self.epsrel <= 0 or self.radius <= 0:
            raise ValueError("quadrature tolerances and radius must be positive")


@dataclass
class BoundaryChart:
    """Parametrization of the level set F^{-1}(u).

    For ``dim == 0`` the boundary is the finite set ``nodes`` (counting
    measure). Otherwise ``point(t)`` maps parameters of shape (..., dim)
    into R^K and ``area_element(t)`` gives the Hausdorff density.
    """

    dim: int
    bounds: list = field(default_factory=list)
    point: Optional[Callable] = None
    area_element: Optional[Callable] = None
    nodes: Optional[np.ndarray] = None

    def seed_params(self, per_dim=17):
        per_dim = per_dim if self.dim == 1 else max(5, int(round(per_dim ** (2.0 / self.dim))))
        axes = []
        for lo, hi in self.bounds:
            axes.append(np.linspace(lo, hi, per_dim, endpoint=not _is_periodic(lo, hi)))
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, self.dim)

    def seed_points(self, per_dim=17):
        if self.dim == 0:
            return np.asarray(self.nodes, dtype=float)
        return self.point(self.seed_params(per_dim))


def _is_periodic(lo, hi):
    return np.isclose(hi - lo, 2 * np.pi)


@dataclass
class FunctionSpec:
    """A subordinating function F: R^K -> R with gradient and Hessian.

    Evaluators take arrays whose last axis has length K. Use the
    ``coordinate``, ``sum_of_squares`` and ``callback`` constructors.
    """

    kind: str
    K: int
    value: Callable
    grad: Callable
    hess: Callable
    chart: Optional[Callable] = None
    tail: Optional[Callable] = None

    @classmethod
    def coordinate(cls, K=1):
        def value(x):
            return np.asarray(x, dtype=float)[..., 0]

        def grad(x):
            x = np.asarray(x, dtype=float)
            g = np.zeros_like(x)
            g[..., 0] = 1.0
            return g

        def hess(x):
            x = np.asarray(x, dtype=float)
            return np.zeros(x.shape + (x.shape[-1],))

        return cls("coordinate", K, value, grad, hess)

    @classmethod
    def sum_of_squares(cls, K=2):
        def value(x):
            x = np.asarray(x, dtype=float)
            return np.sum(x * x, axis=-1)

        def grad(x):
            return 2.0 * np.asarray(x, dtype=float)

        def hess(x):
            x = np.asarray(x, dtype=float)
            return np.broadcast_to(2.0 * np.eye(x.shape[-1]), x.shape + (x.shape[-1],)).copy()

        return cls("sum_of_squares", K, value, grad, hess)

    @classmethod
    def callback(cls, K, value, grad, hess, chart=None, tail=None):
        """User-defined F. ``chart(u)`` must return a BoundaryChart of F^{-1}(u)
        and ``tail(u)`` the standard Gaussian probability P(F(y) >= u)."""
        return cls("callback", K, value, grad, hess, chart=chart, tail=tail)


class DomainSet:
    """The closed set K = {x : F(x) >= u} together with a chart of its boundary."""

    def __init__(self, f, u, quad=None):
        self.f = f
        self.u = float(u)
        self.quad = quad or QuadConfig()
        if f.kind == "sum_of_squares" and not self.u > 0:
            raise ValueError("sum-of-squares level must be positive for a nonempty boundary")
        self.chart = self._build_chart()

    @property
    def K(self):
        return self.f.K

    @property
    def radius(self):
        """Boundary radius for sum-of-squares domains."""
        if self.f.kind != "sum_of_squares":
            raise AttributeError("radius is defined only for sum-of-squares domains")
        return np.sqrt(self.u)

    def contains(self, x):
        return self.f.value(x) >= self.u

    def outward_normal(self, x):
        g = self.f.grad(x)
        n = np.linalg.norm(g, axis=-1, keepdims=True)
        return -g / n

    def gaussian_measure(self):
        """M_0: standard Gaussian probability of K."""
        if self.f.kind == "coordinate":
            return float(gaussian_sf(self.u))
        if self.f.kind == "sum_of_squares":
            return float(stats.chi2.sf(self.u, self.K))
        if self.f.tail is None:
            raise ValueError("callback FunctionSpec needs a tail(u) evaluator for M_0")
        return float(self.f.tail(self.u))

    def _build_chart(self):
        K, u, R = self.K, self.u, self.quad.radius
        if self.f.kind == "coordinate":
            if K == 1:
                return BoundaryChart(0, nodes=np.array([[u]]))

            def point(t):
                t = np.asarray(t, dtype=float)
                lead = np.full(t.shape[:-1] + (1,), u)
                return np.concatenate([lead, t], axis=-1)

            return BoundaryChart(
                K - 1, [(-R, R)] * (K - 1), point, lambda t: np.ones(np.shape(t)[:-1])
            )
        if self.f.kind == "sum_of_squares":
            r = np.sqrt(u)
            if K == 1:
                return BoundaryChart(0, nodes=np.array([[r], [-r]]))
            return _sphere_chart(K, r)
        if self.f.chart is None:
            raise ValueError("callback FunctionSpec needs a chart(u) factory")
        return self.f.chart(u)

    def check_chart(self, n=64, tol=1e-10):
        """Verify charted points lie on F^{-1}(u)."""
        pts = self.chart.seed_points(n)
        err = np.max(np.abs(self.f.value(pts) - self.u))
        if err > tol * max(1.0, abs(self.u)):
            raise ValueError(f"chart leaves the level set by {err:.3e}")
        return err


def _sphere_chart(K, r):
    """Hyperspherical chart of the sphere of radius r in R^K (K >= 2)."""
    n_ang = K - 1
    bounds = [(0.0, np.pi)] * (n_ang - 1) + [(0.0, 2 * np.pi)]

    def point(t):
        t = np.asarray(t, dtype=float)
        out = np.empty(t.shape[:-1] + (K,))
        s = np.ones(t.shape[:-1])
        for i in range(n_ang):
            out[..., i] = s * np.cos(t[..., i])
            s = s * np.sin(t[..., i])
        out[..., K - 1] = s
        return r * out

    def area_element(t):
        t = np.asarray(t, dtype=float)
        a = np.full(t.shape[:-1], r ** (K - 1))
        for i in range(n_ang - 1):
            a = a * np.sin(t[..., i]) ** (K - 2 - i)
        return a

    return BoundaryChart(n_ang, bounds, point, area_element)


def theta_norm(x, d):
    """sqrt(x^T D x) along the last axis."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != d.K:
        raise ValueError(f"vector dimension {x.shape[-1]} does not match D of size {d.K}")
    out = np.sqrt(np.sum(d.diag * x * x, axis=-1))
    return out[()] if np.ndim(out) == 0 else out


def critical_radius(k, d):
    """Largest eps for which the ellipsoidal tube formula is exact (inf when unbounded).

    For the complement of a sphere of radius r the domain maps under
    D^{-1/2} to the complement of an ellipsoid with semi-axes r / sqrt(lambda),
    whose reach is the smallest radius of curvature b^2 / a.
    """
    if k.f.kind == "coordinate":
        return np.inf
    if k.f.kind == "sum_of_squares":
        if k.K == 1:
            return k.radius / np.sqrt(d.lambdas[0])
        return k.radius * np.sqrt(min(d.lambdas)) / max(d.lambdas)
    return None


# ---------------------------------------------------------------- projection


@dataclass
class Projection:
    z: np.ndarray
    value: np.ndarray
    multiplier: np.ndarray
    iterations: int


def _kkt_residual(f, u, dinv, y, z, mu):
    g = f.grad(z)
    r1 = dinv * (z - y) - mu[:, None] * g
    r2 = f.value(z) - u
    return np.concatenate([r1, r2[:, None]], axis=1)


def _newton(f, u, dinv, y, z, mu, tol, max_iter):
    n, K = z.shape
    active = np.arange(n)
    res = _kkt_residual(f, u, dinv, y, z, mu)
    norms = np.linalg.norm(res, axis=1)
    trace = [norms.max() if n else 0.0]
    it = 0
    while active.size and it < max_iter:
        active = active[norms[active] > tol]
        if not active.size:
            break
        it += 1
        za, ma, ya = z[active], mu[active], y[active]
        g = f.grad(za)
        h = f.hess(za)
        jac = np.zeros((active.size, K + 1, K + 1))
        jac[:, :K, :K] = np.eye(K) * dinv - ma[:, None, None] * h
        jac[:, :K, K] = -g
        jac[:, K, :K] = g
        step = np.linalg.solve(jac, -res[active][..., None])[..., 0]
        alpha = np.ones(active.size)
        old = norms[active]
        for _ in range(30):
            zc = za + alpha[:, None] * step[:, :K]
            mc = ma + alpha * step[:, K]
            rc = _kkt_residual(f, u, dinv, ya, zc, mc)
            nc = np.linalg.norm(rc, axis=1)
            bad = ~(nc < old) & (nc > tol)
            if not bad.any():
                break
            alpha[bad] *= 0.5
        z[active], mu[active], res[active], norms[active] = zc, mc, rc, nc
        trace.append(norms[active].max())
    return z, mu, norms, it, trace


def project_batch(y, k, d, tol=1e-10, max_iter=100, n_seeds=17, kkt_tol=1e-8):
    """Minimize (z - y)^T D^{-1} (z - y) over z in K for each row of y.

    Points inside K project to themselves with value 0. Outside points are
    initialized from the best of a grid of chart seeds and refined by
    Lagrange-Newton iteration on the KKT system
    ``D^{-1}(z - y) = mu grad F(z), F(z) = u``.
    """
    y = np.atleast_2d(np.asarray(y, dtype=float))
    if y.shape[1] != k.K or d.K != k.K:
        raise ValueError("dimension mismatch between points, domain and D")
    dinv = 1.0 / d.diag
    n = y.shape[0]
    z = y.copy()
    value = np.zeros(n)
    mu = np.zeros(n)
    outside = np.flatnonzero(~k.contains(y))
    if not outside.size:
        return Projection(z, value, mu, 0)

    yo = y[outside]
    if k.chart.dim == 0:
        seed_t = None
        seeds = k.chart.seed_points()
    else:
        seed_t = k.chart.seed_params(n_seeds)
        seeds = k.chart.point(seed_t)
    z0 = np.empty_like(yo)
    best = np.empty(len(yo))
    best_idx = np.empty(len(yo), dtype=int)
    for lo in range(0, len(yo), 20000):
        blk = yo[lo:lo + 20000]
        vals = np.einsum("nsk,k->ns", (seeds[None] - blk[:, None]) ** 2, dinv)
        idx = np.argmin(vals, axis=1)
        z0[lo:lo + 20000] = seeds[idx]
        best[lo:lo + 20000] = vals[np.arange(len(blk)), idx]
        best_idx[lo:lo + 20000] = idx

    if k.chart.dim == 0:
        z[outside] = z0
        value[outside] = best
        mu[outside] = _multiplier(k, dinv, yo, z0)
        return Projection(z, value, mu, 0)

    m0 = _multiplier(k, dinv, yo, z0)
    scale = 1.0 + np.abs(yo).max(axis=1)
    zo, mo, norms, it, trace = _newton(k.f, k.u, dinv, yo, z0.copy(), m0, tol, max_iter)
    vo = np.sum(dinv * (zo - yo) ** 2, axis=1)
    # Stalled Newton (near-degenerate KKT points close to the medial axis) or
    # convergence to a non-minimizing stationary point: redo on the chart.
    redo = (norms > tol * scale) | (vo > best * (1 + 1e-9) + 1e-14) | (mo < -tol)
    for i in np.flatnonzero(redo):
        zi, mi, vi, ri = _chart_minimize(k, dinv, yo[i], seed_t[best_idx[i]], seed_t, tol, max_iter)
        if ri > kkt_tol * scale[i]:
            raise ProjectionError(
                f"projection did not converge (KKT residual {ri:.3e})", sample=yo[i], trace=trace
            )
        zo[i], mo[i], vo[i] = zi, mi, vi
    z[outside], value[outside], mu[outside] = zo, vo, mo
    return Projection(z, value, mu, it)


def _chart_minimize(k, dinv, y, t0, seed_t, tol, max_iter):
    """Direct minimization of the weighted distance over chart parameters."""
    chart = k.chart

    def g(t):
        return float(np.sum(dinv * (chart.point(np.atleast_1d(t)) - y) ** 2))

    spacing = np.array([np.ptp(seed_t[:, i]) / max(1, len(np.unique(seed_t[:, i])) - 1)
                        for i in range(chart.dim)])
    if chart.dim == 1:
        res = optimize.minimize_scalar(
            g, bounds=(t0[0] - spacing[0], t0[0] + spacing[0]), method="bounded",
            options={"xatol": 1e-13, "maxiter": 500},
        )
        t = np.atleast_1d(res.x)
    else:
        res = optimize.minimize(
            g, t0, method="Nelder-Mead",
            options={"xatol": 1e-13, "fatol": 1e-18, "maxiter": 20000,
                     "initial_simplex": t0 + np.vstack([np.zeros(chart.dim), np.diag(spacing / 2)])},
        )
        t = res.x
    zc = chart.point(t)[None]
    mc = _multiplier(k, dinv, y[None], zc)
    zn, mn, norms, _, _ = _newton(k.f, k.u, dinv, y[None], zc.copy(), mc, tol, max_iter)
    vn = float(np.sum(dinv * (zn[0] - y) ** 2))
    vc = float(np.sum(dinv * (zc[0] - y) ** 2))
    if vn <= vc * (1 + 1e-12) + 1e-15 and mn[0] >= -tol:
        zc, mc = zn, mn
    z = zc[0]
    grad = k.f.grad(z)
    c = mc[0] * np.linalg.norm(grad)
    resid = np.linalg.norm(dinv * (z - y) + c * (-grad / np.linalg.norm(grad)))
    resid = max(resid, abs(float(k.f.value(z)) - k.u))
    return z, mc[0], float(np.sum(dinv * (z - y) ** 2)), resid


def _multiplier(k, dinv, y, z):
    g = k.f.grad(z)
    return np.sum(g * dinv * (z - y), axis=1) / np.sum(g * g, axis=1)


def project_onto_K(y, k, d, tol=1e-10, max_iter=100):
    """Weighted projection of a single point: returns (z, V_K(y))."""
    p = project_batch(np.asarray(y, dtype=float)[None], k, d, tol, max_iter)
    return p.z[0], float(p.value[0])


def tube_membership(y, k, d, eps):
    if not eps > 0:
        raise ValueError("eps must be positive")
    y = np.asarray(y, dtype=float)
    p = project_batch(np.atleast_2d(y), k, d)
    inside = p.value <= eps * eps
    return bool(inside[0]) if y.ndim == 1 else inside


# ------------------------------------------------------------- shape matrix


def tangent_frame(eta, d):
    """Frame E_1..E_{K-1} of eta-perp, orthonormal for <.,.>_{D^{-1}}.

    Tangent vectors at a boundary point are exactly the ones
    D^{-1}-orthogonal to E_K = D eta / |eta|_D.
    """
    eta = np.asarray(eta, dtype=float)
    K = eta.size
    # Euclidean orthonormal basis of eta-perp from the SVD null space.
    _, _, vt = np.linalg.svd(eta[None, :])
    t = vt[1:].T
    gram = t.T @ (t / d.diag[:, None])
    chol = np.linalg.cholesky(gram)
    frame = np.linalg.solve(chol, t.T).T
    return frame.reshape(K, K - 1)


def shape_matrix(z, k, d):
    """(K-1)x(K-1) matrix A(z) with det(I + eps A) the tube-boundary Jacobian."""
    z = np.asarray(z, dtype=float)
    g = k.f.grad(z)
    gn = np.linalg.norm(g)
    if gn < 1e-12:
        raise ValueError(f"degenerate frame: |grad F| = {gn:.3e} at {z}")
    if k.K == 1:
        return np.zeros((0, 0))
    frame = tangent_frame(-g / gn, d)
    h = k.f.hess(z)
    return -(frame.T @ h @ frame) / theta_norm(g, d)


def surface_measure_density(j, z, k, d):
    """Density of M*_j against (K-1)-dim Hausdorff measure: (j-1)! detr_{j-1}(A)."""
    if j < 1:
        raise ValueError("surface measures start at j = 1")
    if j > k.K:
        return 0.0
    if j == 1:
        return 1.0
    return factorial(j - 1) * detr(j - 1, shape_matrix(z, k, d))


# ------------------------------------------------------------------ GMFs


@dataclass
class GmfVector:
    values: np.ndarray
    errors: np.ndarray

    def __getitem__(self, j):
        return self.values[j]

    def __len__(self):
        return len(self.values)


def integrate_chart(chart, func, quad):
    """Integrate a vector-valued ``func(x, t)`` over a boundary chart.

    ``func`` receives the boundary point and chart parameter and must
    already include the area element. Returns (values, error estimates).
    """
    if chart.dim == 0:
        vals = np.sum([func(x, None) for x in chart.nodes], axis=0)
        return np.asarray(vals, dtype=float), np.zeros(np.shape(vals))

    def nested(level, prefix):
        lo, hi = chart.bounds[level]
        if level == chart.dim - 1:
            def inner(s):
                t = np.array(prefix + [s])
                return func(chart.point(t), t)
        else:
            def inner(s):
                return nested(level + 1, prefix + [s])[0]
        val, err = integrate.quad_vec(
            inner, lo, hi, epsabs=quad.epsabs, epsrel=quad.epsrel, limit=quad.limit
        )
        return val, err

    val, err = nested(0, [])
    return np.asarray(val, dtype=float), np.full(np.shape(val), float(err))


def _gmf_integrand(k, d, max_order):
    lam = d.diag

    def func(x, t):
        g = k.f.grad(x)
        eta = -g / np.linalg.norm(g)
        w = np.sqrt(np.sum(lam * eta * eta))
        deta = lam * eta
        r = np.linalg.norm(deta) / w
        s = float(x @ deta) / np.linalg.norm(deta)
        a = shape_matrix(x, k, d)
        mstar = [factorial(m) * detr(m, a) if m < k.K else 0.0 for m in range(max_order)]
        area = 1.0 if t is None else float(k.chart.area_element(t))
        base = w * gaussian_pdf_nd(x) * area
        out = np.zeros(max_order)
        for l in range(1, max_order + 1):
            acc = 0.0
            for m in range(l):
                if mstar[m] == 0.0:
                    continue
                p = l - 1 - m
                acc += binom(l - 1, m) * (-1) ** p * r ** p * hermite_prob(p, s) * mstar[m]
            out[l - 1] = base * acc
        return out

    return func


def gmf(k, d, max_order, quad=None):
    """Gaussian Minkowski functionals (M_0..M_max_order) of K under D.

    M_0 is the Gaussian measure of K. For l >= 1 the boundary integral of
    the tube expansion is evaluated on the domain's chart; the quadrature
    error estimate is returned alongside.
    """
    if d.K != k.K:
        raise ValueError("D and the domain disagree on the ambient dimension")
    if max_order < 0:
        raise ValueError("max_order must be nonnegative")
    quad = quad or k.quad
    values = np.zeros(max_order + 1)
    errors = np.zeros(max_order + 1)
    values[0] = k.gaussian_measure()
    if max_order:
        v, e = integrate_chart(k.chart, _gmf_integrand(k, d, max_order), quad)
        values[1:], errors[1:] = v, e
    return GmfVector(values, errors)


def tube_expansion(gmfs, eps, order=None):
    """sum_{l <= order} eps^l / l! * M_l."""
    order = len(gmfs) - 1 if order is None else order
    eps = np.asarray(eps, dtype=float)
    return sum(eps ** l / factorial(l) * gmfs[l] for l in range(order + 1))


# --------------------------------------------------------- Monte Carlo oracle


@dataclass
class TubeVolumeEstimate:
    eps: np.ndarray
    estimate: np.ndarray
    std_error: np.ndarray
    n: int


def _count_chunk(k, d, eps2, n, seed, worker, batch):
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(worker,)))
    counts = np.zeros(eps2.size, dtype=np.int64)
    done = 0
    while done < n:
        m = min(batch, n - done)
        y = rng.standard_normal((m, k.K))
        try:
            v = project_batch(y, k, d).value
        except ProjectionError as exc:
            raise ProjectionError(
                f"tube-volume sample failed in worker {worker}: {exc}", exc.sample, exc.trace
            ) from exc
        counts += np.count_nonzero(v[:, None] <= eps2[None, :], axis=0)
        done += m
    return counts


def mc_tube_volume(k, d, eps, n, seed, workers=1, batch=200_000):
    """Monte-Carlo Gaussian volume of the ellipsoidal tube at one or more eps.

    Trials are split evenly over ``workers``; worker ``i`` draws from a
    stream seeded by (seed, i), so results depend only on (seed, workers).
    Every eps is evaluated on the same samples.
    """
    if n < 1000:
        raise ValueError("need at least 1000 trials")
    eps = np.atleast_1d(np.asarray(eps, dtype=float))
    if np.any(eps < 0):
        raise ValueError("eps must be nonnegative")
    eps2 = eps * eps
    sizes = [n // workers + (i < n % workers) for i in range(workers)]
    if workers == 1:
        counts = [_count_chunk(k, d, eps2, sizes[0], seed, 0, batch)]
    else:
        with ThreadPoolExecutor(workers) as pool:
            counts = list(
                pool.map(lambda i: _count_chunk(k, d, eps2, sizes[i], seed, i, batch), range(workers))
            )
    total = np.sum(counts, axis=0)
    p = total / n
    return TubeVolumeEstimate(eps, p, np.sqrt(p * (1 - p) / n), n)
