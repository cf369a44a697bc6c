"""Isotropic Gaussian component fields on the sphere and on the circle.

Sphere fields are synthesized from real spherical harmonics with the
orthonormality convention ``∫ zeta_lm^2 = 1`` over S^2, so a spectrum is
unit-variance when ``sum (2l + 1) C_l / (4 pi) = 1``.
"""

import csv
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import special



@dataclass(frozen=True, eq=False)
class PowerSpectrum:
    """Angular power spectrum C_0..C_lmax of one isotropic component."""

    c_ell: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.c_ell, dtype=float)
        if c.ndim != 1 or c.size == 0:
            raise ValueError("c_ell must be a nonempty 1-D sequence")
        if np.any(c < 0) or not np.all(np.isfinite(c)):
            raise ValueError("c_ell must be finite and nonnegative")
        object.__setattr__(self, "c_ell", c)

    @property
    def lmax(self):
        return self.c_ell.size - 1

    @property
    def variance(self):
        ell = np.arange(self.c_ell.size)
        return float(np.sum((2 * ell + 1) * self.c_ell) / (4 * np.pi))

    def is_normalized(self, tol=1e-10):
        return abs(self.variance - 1.0) <= tol

    def normalized(self):
        v = self.variance
        if v <= 0:
            raise ValueError("cannot normalize an all-zero spectrum")
        return PowerSpectrum(self.c_ell / v)

    @classmethod
    def single_ell(cls, ell, lmax=None):
        lmax = ell if lmax is None else lmax
        c = np.zeros(lmax + 1)
        c[ell] = 4 * np.pi / (2 * ell + 1)
        return cls(c)

    @classmethod
    def gaussian_beam(cls, lmax, width, lmin=1):
        """C_l proportional to exp(-l(l+1)/(2 width^2)) on [lmin, lmax], normalized."""
        ell = np.arange(lmax + 1)
        c = np.exp(-ell * (ell + 1) / (2.0 * width ** 2))
        c[:lmin] = 0.0
        return cls(c).normalized()

    @classmethod
    def from_csv(cls, path):
        """Read the two-column ``ell,c_ell`` format; missing ell rows are zero."""
        rows = []
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = [h.strip() for h in next(reader)]
            if header != ["ell", "c_ell"]:
                raise ValueError(f"{path}: expected header 'ell,c_ell', got {','.join(header)}")
            for line in reader:
                if not line or not "".join(line).strip():
                    continue
                rows.append((int(line[0]), float(line[1])))
        if not rows:
            raise ValueError(f"{path}: no spectrum rows")
        ells = [r[0] for r in rows]
        if min(ells) < 0 or len(set(ells)) != len(ells):
            raise ValueError(f"{path}: ell values must be distinct and nonnegative")
        c = np.zeros(max(ells) + 1)
        for ell, val in rows:
            c[ell] = val
        return cls(c)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["ell", "c_ell"])
            for ell, val in enumerate(self.c_ell):
                w.writerow([ell, repr(float(val))])


def spectral_moment(spectrum):
    """Per-direction gradient variance of a unit-variance field with this spectrum."""
    c = spectrum.c_ell
    ell = np.arange(c.size)
    return float(np.sum((2 * ell + 1) * c * ell * (ell + 1)) / (8 * np.pi))


def real_sph_harm_basis(lmax, points):
    """Real orthonormal spherical harmonics at unit vectors; columns indexed l^2 + l + m."""
    p = np.asarray(points, dtype=float)
    polar = np.arccos(np.clip(p[:, 2], -1.0, 1.0))
    azim = np.arctan2(p[:, 1], p[:, 0])
    out = np.empty((len(p), (lmax + 1) ** 2))
    for ell in range(lmax + 1):
        for m in range(ell + 1):
            y = special.sph_harm_y(ell, m, polar, azim)
            if m == 0:
                out[:, ell * ell + ell] = y.real
            else:
                s = np.sqrt(2.0) * (-1) ** m
                out[:, ell * ell + ell + m] = s * y.real
                out[:, ell * ell + ell - m] = s * y.imag
    return out


@dataclass(eq=False)
class FieldSample:
    """Values of a K-vector field at mesh vertices (n_vertices x K)."""

    values: np.ndarray
    seed: int
    spectra: tuple = field(default_factory=tuple)

    @property
    def K(self):
        return self.values.shape[1]


def _rng(seed, index=None):
    key = () if index is None else (index,)
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


class SphereSynthesizer:
    """Cached harmonic basis for repeated synthesis on one grid."""

    def __init__(self, grid, lmax):
        if lmax < 2:
            raise ValueError("lmax must be at least 2")
        self.grid = grid
        self.lmax = lmax
        nyquist = nyquist_lmax(grid)
        if grid.level >= 0 and lmax > nyquist:
            warnings.warn(
                f"lmax={lmax} exceeds the resolvable degree {nyquist} of a level-{grid.level} icosphere",
                stacklevel=2,
            )
        self.basis = real_sph_harm_basis(lmax, grid.vertices)
        self._ell = np.repeat(np.arange(lmax + 1), 2 * np.arange(lmax + 1) + 1)

    def coefficient_std(self, spectra):
        rows = []
        for s in spectra:
            if not s.is_normalized(1e-10):
                raise ValueError(f"spectrum is not unit-variance (variance {s.variance:.12g})")
            if s.lmax > self.lmax:
                raise ValueError(f"spectrum lmax {s.lmax} exceeds synthesizer lmax {self.lmax}")
            c = np.zeros(self.lmax + 1)
            c[: s.lmax + 1] = s.c_ell
            rows.append(np.sqrt(c[self._ell]))
        return np.stack(rows, axis=1)

    def coefficients(self, spectra, rng):
        std = self.coefficient_std(spectra)
        return rng.standard_normal(std.shape) * std

    def synthesize(self, spectra, seed, index=None):
        a = self.coefficients(spectra, _rng(seed, index))
        return FieldSample(self.basis @ a, seed, tuple(spectra))

    def synthesize_many(self, spectra, seed, indices):
        """Values for several replications, shape (len(indices), n_vertices, K).

        Replication i always uses the stream seeded by (seed, i).
        """
        std = self.coefficient_std(spectra)
        coef = np.stack([_rng(seed, int(i)).standard_normal(std.shape) * std for i in indices])
        n, nc, k = coef.shape
        flat = coef.transpose(1, 0, 2).reshape(nc, n * k)
        vals = self.basis @ flat
        return vals.reshape(-1, n, k).transpose(1, 0, 2)


def nyquist_lmax(grid):
    """Largest degree resolved by a grid: a quarter of the vertices per great circle."""
    per_circle = 2 * np.pi / grid.mean_edge_length()
    return int(per_circle // 4)


def synthesize_sphere(spectra, grid, seed):
    """One K-vector sample of independent isotropic fields on a sphere grid."""
    lmax = max(2, max(s.lmax for s in spectra))
    return SphereSynthesizer(grid, lmax).synthesize(spectra, seed)


# --------------------------------------------------------------- circle


@dataclass(frozen=True, eq=False)
class FourierSpectrum:
    """Mode variances w_1..w_n of a stationary field on a circle.

    The field is ``sum_k sqrt(w_k) (a_k cos(2 pi k t / c) + b_k sin(2 pi k t / c))``
    with iid standard normal a_k, b_k; unit variance means ``sum w_k = 1``.
    """

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or np.any(w < 0):
            raise ValueError("weights must be a nonnegative 1-D sequence")
        object.__setattr__(self, "weights", w / w.sum())

    def spectral_moment(self, circumference):
        k = np.arange(1, self.weights.size + 1)
        return float(np.sum(self.weights * (2 * np.pi * k / circumference) ** 2))


def synthesize_circle(spectra, grid, circumference, seed, index=None):
    rng = _rng(seed, index)
    n = grid.n_vertices
    t = np.arange(n) * (circumference / n)
    out = np.empty((n, len(spectra)))
    for j, s in enumerate(spectra):
        k = np.arange(1, s.weights.size + 1)
        phase = 2 * np.pi * np.outer(t, k) / circumference
        a, b = rng.standard_normal((2, k.size))
        amp = np.sqrt(s.weights)
        out[:, j] = np.cos(phase) @ (amp * a) + np.sin(phase) @ (amp * b)
    return FieldSample(out, seed, tuple(spectra))


# ------------------------------------------------- gradient covariance oracle


def _tangent_frames(p):
    ref = np.where(np.abs(p[:, 2:3]) < 0.9, np.array([[0.0, 0.0, 1.0]]), np.array([[1.0, 0.0, 0.0]]))
    e1 = np.cross(p, ref)
    e1 /= np.linalg.norm(e1, axis=1, keepdims=True)
    e2 = np.cross(p, e1)
    return e1, e2


def gradient_stencils(grid, probes):
    """Least-squares weights turning 2-ring value differences into tangent gradients.

    A cubic model in normal coordinates (log map at the probe) is fitted to
    the 2-ring. Dropping the cubic terms lets them alias into the gradient on
    the irregular icosphere stencil and biases the variance low.
    Returns a list of (neighbor indices, 2 x n weights) per probe.
    """
    adj = grid.neighbors
    v = grid.vertices
    e1, e2 = _tangent_frames(v[probes])
    out = []
    for i, p in enumerate(probes):
        ring1 = adj[p].indices
        ring2 = np.unique(np.concatenate([adj[q].indices for q in ring1]))
        nb = np.setdiff1d(np.union1d(ring1, ring2), [p])
        q = v[nb]
        cosang = np.clip(q @ v[p], -1.0, 1.0)
        ang = np.arccos(cosang)
        tang = q - cosang[:, None] * v[p]
        tang /= np.linalg.norm(tang, axis=1, keepdims=True)
        x = ang * (tang @ e1[i])
        y = ang * (tang @ e2[i])
        design = np.c_[x, y, x * x, x * y, y * y, x ** 3, x * x * y, x * y * y, y ** 3]
        w = np.linalg.pinv(design)[:2]
        out.append((nb, w))
    return out


@dataclass
class GradientCovariance:
    """Empirical Cov(grad y) as a (K n) x (K n) matrix, index k * n + i."""

    cov: np.ndarray
    std_error: np.ndarray
    n_replications: int
    n_probes: int

    def blocks(self, n=2):
        k = self.cov.shape[0] // n
        return self.cov.reshape(k, n, k, n)


def gradient_covariance_check(samples, grid, n_probes=300, seed=0):
    """Estimate Cov(grad y) from replicated samples on a sphere grid.

    ``samples`` is a sequence of FieldSample or an array of shape
    (replications, n_vertices, K). Tangent-plane gradients are estimated at
    randomly chosen probe vertices; the standard error treats replications
    as the independent units.
    """
    vals = np.stack([s.values for s in samples]) if not isinstance(samples, np.ndarray) else samples
    if vals.shape[0] < 100:
        raise ValueError("need at least 100 replications")
    rng = np.random.default_rng(seed)
    probes = rng.choice(grid.n_vertices, size=min(n_probes, grid.n_vertices), replace=False)
    stencils = gradient_stencils(grid, probes)
    r, _, k = vals.shape
    grads = np.empty((r, len(probes), k, 2))
    for i, (p, (nb, w)) in enumerate(zip(probes, stencils)):
        diff = vals[:, nb, :] - vals[:, p:p + 1, :]
        grads[:, i] = np.einsum("dn,rnk->rkd", w, diff)
    flat = grads.reshape(r, len(probes), 2 * k)
    per_rep = np.einsum("rpa,rpb->rab", flat, flat) / len(probes)
    cov = per_rep.mean(axis=0)
    se = per_rep.std(axis=0, ddof=1) / np.sqrt(r)
    return GradientCovariance(cov, se, r, len(probes))
