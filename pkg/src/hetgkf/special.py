"""Scalar special functions and principal-minor sums."""

from itertools import combinations
from math import comb

import numpy as np
from scipy import special as _sp

SQRT_2PI = np.sqrt(2.0 * np.pi)


def hermite_prob(n, x):
    """Probabilists' Hermite polynomial He_n evaluated at x.

    Uses the three-term recurrence He_{n+1} = x He_n - n He_{n-1}.
    Scalars and arrays both work.
    """
    if n < 0:
        raise ValueError(f"Hermite order must be nonnegative, got {n}")
    x = np.asarray(x, dtype=float)
    if n == 0:
        out = np.ones_like(x)
    else:
        prev, cur = np.ones_like(x), x.copy()
        for k in range(1, n):
            prev, cur = cur, x * cur - k * prev
        out = cur
    return out[()] if out.ndim == 0 else out


def gaussian_pdf(x):
    x = np.asarray(x, dtype=float)
    out = np.exp(-0.5 * x * x) / SQRT_2PI
    return out[()] if out.ndim == 0 else out


def gaussian_cdf(x):
    out = _sp.ndtr(np.asarray(x, dtype=float))
    return out[()] if np.ndim(out) == 0 else out


def gaussian_sf(x):
    """Upper tail 1 - Phi(x), accurate for large positive x."""
    out = 0.5 * _sp.erfc(np.asarray(x, dtype=float) / np.sqrt(2.0))
    return out[()] if np.ndim(out) == 0 else out


def gaussian_pdf_nd(x):
    """Standard K-variate Gaussian density; the last axis of x is the coordinate."""
    x = np.asarray(x, dtype=float)
    k = x.shape[-1]
    return np.exp(-0.5 * np.sum(x * x, axis=-1)) / (2.0 * np.pi) ** (k / 2.0)


def detr(j, m):
    """Sum of all j x j principal minors of a square matrix.

    detr(0, m) is 1 and detr(dim, m) is det(m). These are the coefficients
    of det(I + eps * m) as a polynomial in eps.
    """
    m = np.atleast_2d(np.asarray(m, dtype=float))
    if m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    n = m.shape[0]
    if j < 0 or j > n:
        raise ValueError(f"detr order {j} out of range for a {n}x{n} matrix")
    if j == 0:
        return 1.0
    if n > 8:
        raise ValueError("minor enumeration is limited to dim <= 8")
    total = 0.0
    for idx in combinations(range(n), j):
        total += np.linalg.det(m[np.ix_(idx, idx)])
    return float(total)


def elementary_symmetric(values, j):
    """e_j of a sequence of numbers (e_0 = 1)."""
    e = np.zeros(len(values) + 1, dtype=np.result_type(np.asarray(values), float))
    e[0] = 1.0
    for v in values:
        e[1:] = e[1:] + v * e[:-1]
    return e[j] if j <= len(values) else 0.0


def binom(n, k):
    return comb(n, k)
