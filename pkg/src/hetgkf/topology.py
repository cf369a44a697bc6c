"""Euler characteristic of excursion sets on triangulated grids, and its MC mean."""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .fields import FourierSpectrum, PowerSpectrum, SphereSynthesizer, synthesize_circle
from .mesh import circle_grid, icosphere


@dataclass
class ExcursionMask:
    above: np.ndarray
    level: float

    def __len__(self):
        return len(self.above)


def _field_values(values, f):
    values = np.asarray(values, dtype=float)
    if values.ndim != 2 or values.shape[1] != f.K:
        raise ValueError(f"sample has shape {values.shape}, F expects {f.K} components")
    return f.value(values)


def excursion_mask(sample, f, u):
    """Vertices where F(y) >= u."""
    return ExcursionMask(_field_values(sample.values, f) >= u, float(u))


def euler_characteristic(grid, mask, strict_below=False):
    """V' - E' + F' of the subcomplex spanned by the selected vertices.

    A simplex belongs to the subcomplex when all its vertices are selected.
    With ``strict_below`` the complementary open set {f < u} is counted.
    """
    sel = np.asarray(mask.above, dtype=bool)
    if len(sel) != grid.n_vertices:
        raise ValueError(f"mask has {len(sel)} entries, grid has {grid.n_vertices} vertices")
    if strict_below:
        sel = ~sel
    chi = int(sel.sum()) - int(np.all(sel[grid.edges], axis=1).sum())
    if len(grid.triangles):
        chi += int(np.all(sel[grid.triangles], axis=1).sum())
    return chi


def euler_curve(grid, values, levels):
    """chi of {f >= u} for every u in ``levels`` from one vector of vertex values.

    A simplex enters the excursion once u drops below the minimum of f over
    its vertices, so three sorted arrays give the whole curve.
    """
    values = np.asarray(values, dtype=float)
    levels = np.asarray(levels, dtype=float)
    out = np.zeros(levels.shape, dtype=np.int64)
    for simplices, sign in ((None, 1), (grid.edges, -1), (grid.triangles, 1)):
        if simplices is None:
            m = values
        elif len(simplices) == 0:
            continue
        else:
            m = values[simplices].min(axis=1)
        m = np.sort(m)
        out += sign * (len(m) - np.searchsorted(m, levels, side="left"))
    return out


@dataclass
class EcEstimate:
    """Per-level sample mean and standard error of chi over ``n_sims`` fields."""

    levels: np.ndarray
    mean: np.ndarray
    std_error: np.ndarray
    n_sims: int
    chi: np.ndarray

    def rows(self):
        return list(zip(self.levels.tolist(), self.mean.tolist(), self.std_error.tolist()))


def _summarize(levels, chi):
    n = chi.shape[0]
    mean = np.array([math.fsum(col) / n for col in chi.T.astype(float)])
    dev = chi - mean
    var = np.array([math.fsum(col) for col in (dev * dev).T]) / (n - 1)
    return EcEstimate(np.asarray(levels, dtype=float), mean, np.sqrt(var / n), n, chi)


def mc_expected_ec(m, spectra, f, levels, n_sims, seed, mesh_level=6, lmax=None,
                   n_points=2048, batch=50, workers=1):
    """Monte Carlo mean of chi(M ∩ {F(y) >= u}) at each level.

    ``m`` is a unit ``sphere2`` (spectra are PowerSpectrum records) or a
    ``circle`` (spectra are FourierSpectrum records, ``n_points`` grid
    vertices). Simulation i uses the stream derived from (seed, i), so the
    output does not depend on ``batch`` or ``workers``.
    """
    if n_sims < 100:
        raise ValueError("n_sims must be at least 100")
    spectra = list(spectra)
    if len(spectra) != f.K:
        raise ValueError(f"{len(spectra)} spectra given, F expects {f.K} components")
    levels = np.atleast_1d(np.asarray(levels, dtype=float))

    if m.kind == "sphere2":
        if m.params[0] != 1.0:
            raise ValueError("sphere simulations run on the unit sphere")
        if not all(isinstance(s, PowerSpectrum) for s in spectra):
            raise TypeError("sphere fields need PowerSpectrum spectra")
        grid = icosphere(mesh_level)
        synth = SphereSynthesizer(grid, lmax or max(2, max(s.lmax for s in spectra)))

        def draw(idx):
            return synth.synthesize_many(spectra, seed, idx)
    elif m.kind == "circle":
        if not all(isinstance(s, FourierSpectrum) for s in spectra):
            raise TypeError("circle fields need FourierSpectrum spectra")
        circ = m.params[0]
        grid = circle_grid(n_points, circ)

        def draw(idx):
            return np.stack([synthesize_circle(spectra, grid, circ, seed, int(i)).values for i in idx])
    else:
        raise ValueError(f"simulation on {m.kind!r} is not supported")

    def run(idx):
        vals = draw(idx)
        return np.stack([euler_curve(grid, f.value(v), levels) for v in vals])

    chunks = [range(i, min(i + batch, n_sims)) for i in range(0, n_sims, batch)]
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(run, chunks))
    else:
        parts = [run(c) for c in chunks]
    return _summarize(levels, np.concatenate(parts))


def simulate_fields(spectra, mesh_level, seed, n_sims=1, lmax=None):
    """Replicated sphere samples as an array (n_sims, n_vertices, K)."""
    grid = icosphere(mesh_level)
    synth = SphereSynthesizer(grid, lmax or max(2, max(s.lmax for s in spectra)))
    return grid, synth.synthesize_many(list(spectra), seed, range(n_sims))


__all__ = [
    "ExcursionMask", "excursion_mask", "euler_characteristic", "euler_curve",
    "EcEstimate", "mc_expected_ec", "simulate_fields",
]
