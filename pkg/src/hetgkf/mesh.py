"""Triangulated parameter spaces: icospheres and discretized circles."""

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import sparse


@dataclass(frozen=True, eq=False)
class Mesh:
    """Simplicial complex with vertex coordinates.

    ``edges`` is (E, 2) and ``triangles`` is (F, 3), possibly empty. For
    sphere grids every vertex lies on the unit sphere.
    """

    vertices: np.ndarray
    edges: np.ndarray
    triangles: np.ndarray
    level: int = -1

    @property
    def n_vertices(self):
        return len(self.vertices)

    def euler_number(self):
        return len(self.vertices) - len(self.edges) + len(self.triangles)

    @cached_property
    def neighbors(self):
        """CSR vertex adjacency."""
        n = self.n_vertices
        e = self.edges
        a = sparse.coo_matrix((np.ones(2 * len(e)), (np.r_[e[:, 0], e[:, 1]], np.r_[e[:, 1], e[:, 0]])),
                              shape=(n, n))
        return a.tocsr()

    def mean_edge_length(self):
        v = self.vertices
        return float(np.mean(np.linalg.norm(v[self.edges[:, 0]] - v[self.edges[:, 1]], axis=1)))


def _unique_edges(triangles):
    e = np.vstack([triangles[:, [0, 1]], triangles[:, [1, 2]], triangles[:, [2, 0]]])
    e.sort(axis=1)
    return np.unique(e, axis=0)


def _icosahedron():
    p = (1 + np.sqrt(5)) / 2
    v = np.array([
        [-1, p, 0], [1, p, 0], [-1, -p, 0], [1, -p, 0],
        [0, -1, p], [0, 1, p], [0, -1, -p], [0, 1, -p],
        [p, 0, -1], [p, 0, 1], [-p, 0, -1], [-p, 0, 1],
    ], dtype=float)
    f = np.array([
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ])
    return v / np.linalg.norm(v, axis=1, keepdims=True), f


def icosphere(level):
    """Unit icosphere after ``level`` rounds of 4-to-1 subdivision.

    Vertex count is 10 * 4**level + 2.
    """
    if level < 0:
        raise ValueError("subdivision level must be nonnegative")
    v, f = _icosahedron()
    for _ in range(level):
        edges = _unique_edges(f)
        n = len(v)
        mid = v[edges[:, 0]] + v[edges[:, 1]]
        mid /= np.linalg.norm(mid, axis=1, keepdims=True)
        # edge (a, b) with a < b -> new vertex index, via a sparse lookup
        lookup = sparse.csr_matrix((np.arange(len(edges)) + n, (edges[:, 0], edges[:, 1])), shape=(n, n))

        def mid_index(a, b):
            lo, hi = np.minimum(a, b), np.maximum(a, b)
            return np.asarray(lookup[lo, hi]).ravel()

        a, b, c = f[:, 0], f[:, 1], f[:, 2]
        ab, bc, ca = mid_index(a, b), mid_index(b, c), mid_index(c, a)
        f = np.vstack([
            np.c_[a, ab, ca], np.c_[b, bc, ab], np.c_[c, ca, bc], np.c_[ab, bc, ca],
        ])
        v = np.vstack([v, mid])
    return Mesh(v, _unique_edges(f), f, level)


def circle_grid(n_points, circumference=2 * np.pi):
    """Closed polygon of ``n_points`` equally spaced points on a circle."""
    if n_points < 3:
        raise ValueError("a circle grid needs at least 3 points")
    t = np.arange(n_points) * (circumference / n_points)
    r = circumference / (2 * np.pi)
    v = np.c_[r * np.cos(t / r), r * np.sin(t / r)]
    i = np.arange(n_points)
    e = np.sort(np.c_[i, (i + 1) % n_points], axis=1)
    return Mesh(v, e, np.zeros((0, 3), dtype=int))


def cotangent_laplacian(mesh):
    """Discrete Laplace-Beltrami operator with Voronoi lumped mass, as a sparse matrix.

    Barycentric mass is noticeably less accurate on the irregular valence
    pattern of a subdivided icosahedron.
    """
    v, f = mesh.vertices, mesh.triangles
    n = len(v)
    rows, cols, vals = [], [], []
    area = np.zeros(n)
    for i, j, k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        a, b, c = f[:, i], f[:, j], f[:, k]
        u1 = v[a] - v[c]
        u2 = v[b] - v[c]
        cot = np.sum(u1 * u2, axis=1) / np.linalg.norm(np.cross(u1, u2), axis=1)
        rows += [a, b]
        cols += [b, a]
        vals += [0.5 * cot, 0.5 * cot]
        share = cot * np.sum((v[a] - v[b]) ** 2, axis=1) / 8
        np.add.at(area, a, share)
        np.add.at(area, b, share)
    w = sparse.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                          shape=(n, n)).tocsr()
    lap = w - sparse.diags(np.asarray(w.sum(axis=1)).ravel())
    return sparse.diags(1.0 / area) @ lap
