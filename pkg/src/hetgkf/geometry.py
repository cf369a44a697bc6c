"""Lipschitz-Killing curvatures of the supported parameter manifolds."""

from dataclasses import dataclass

import numpy as np

_SIZES = {
    "interval": ("length",),
    "rectangle": ("a", "b"),
    "sphere2": ("radius",),
    "circle": ("circumference",),
}

_DIMS = {"interval": 1, "rectangle": 2, "sphere2": 2, "circle": 1}


@dataclass(frozen=True)
class Manifold:
    """A parameter space with its size parameters.

    Build with the helper constructors, e.g. ``Manifold.sphere2(1.0)``.
    """

    kind: str
    params: tuple

    def __post_init__(self):
        if self.kind not in _SIZES:
            raise ValueError(f"unsupported manifold kind {self.kind!r}")
        if len(self.params) != len(_SIZES[self.kind]):
            raise ValueError(f"{self.kind} expects parameters {_SIZES[self.kind]}")
        if any(not np.isfinite(p) or p <= 0 for p in self.params):
            raise ValueError(f"manifold size parameters must be positive, got {self.params}")

    @property
    def dim(self):
        return _DIMS[self.kind]

    @classmethod
    def interval(cls, length):
        return cls("interval", (float(length),))

    @classmethod
    def rectangle(cls, a, b):
        return cls("rectangle", (float(a), float(b)))

    @classmethod
    def sphere2(cls, radius=1.0):
        return cls("sphere2", (float(radius),))

    @classmethod
    def circle(cls, circumference):
        return cls("circle", (float(circumference),))

    def scaled(self, factor):
        """The same manifold with every length multiplied by ``factor``."""
        return Manifold(self.kind, tuple(p * factor for p in self.params))


@dataclass(frozen=True)
class LkcVector:
    values: tuple

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))

    def __len__(self):
        return len(self.values)

    def __getitem__(self, j):
        return self.values[j]

    def __iter__(self):
        return iter(self.values)

    @property
    def dim(self):
        return len(self.values) - 1

    def as_array(self):
        return np.array(self.values)


def lkc(m):
    """Intrinsic volumes (L_0, ..., L_dim) of ``m`` under its flat or round metric.

    The circle returns (0, c): its Euler characteristic vanishes, so an
    excursion-set expectation on it has no L_0 term.
    """
    if m.kind == "interval":
        (t,) = m.params
        return LkcVector((1.0, t))
    if m.kind == "rectangle":
        a, b = m.params
        return LkcVector((1.0, a + b, a * b))
    if m.kind == "sphere2":
        (r,) = m.params
        return LkcVector((2.0, 0.0, 4.0 * np.pi * r * r))
    if m.kind == "circle":
        (c,) = m.params
        return LkcVector((0.0, c))
    raise ValueError(f"unsupported manifold kind {m.kind!r}")


def scale_lkc(lkcs, nu):
    """LKCs under the metric ``nu * g``: L_j picks up a factor nu**(j/2)."""
    if not nu > 0:
        raise ValueError(f"scale factor must be positive, got {nu}")
    if nu == 1:
        return LkcVector(tuple(lkcs))
    return LkcVector(tuple(v * nu ** (j / 2.0) for j, v in enumerate(lkcs)))
