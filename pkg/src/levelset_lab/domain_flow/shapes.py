"""Initial level-set functions with analytic gradient and Hessian.

Convention: positive inside the bounded phase, negative outside.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Sphere:
    """Signed distance r0 - |x - c| (circle in 2D)."""

    center: tuple[float, ...]
    radius: float

    @property
    def dimension(self) -> int:
        return len(self.center)

    def value(self, x):
        x = np.asarray(x, float)
        return self.radius - np.linalg.norm(x - np.asarray(self.center), axis=-1)

    def grad(self, x):
        y = np.asarray(x, float) - np.asarray(self.center)
        r = np.linalg.norm(y, axis=-1, keepdims=True)
        return -y / np.maximum(r, 1e-300)

    def hess(self, x):
        y = np.asarray(x, float) - np.asarray(self.center)
        r = np.maximum(np.linalg.norm(y, axis=-1), 1e-300)[..., None, None]
        eye = np.eye(self.dimension)
        return -(eye - y[..., :, None] * y[..., None, :] / r**2) / r

    def __call__(self, x):
        return self.value(x)


@dataclass(frozen=True)
class Ellipsoid:
    """(1 - sum((x_i - c_i)/a_i)^2) * min(a)/2: smooth, |grad| = 1 at the minor-axis tips."""

    center: tuple[float, ...]
    semi_axes: tuple[float, ...]

    @property
    def dimension(self) -> int:
        return len(self.center)

    @property
    def _scale(self) -> float:
        return min(self.semi_axes) / 2.0

    def value(self, x):
        y = (np.asarray(x, float) - np.asarray(self.center)) / np.asarray(self.semi_axes)
        return (1.0 - np.sum(y**2, axis=-1)) * self._scale

    def grad(self, x):
        a = np.asarray(self.semi_axes)
        y = np.asarray(x, float) - np.asarray(self.center)
        return -2.0 * self._scale * y / a**2

    def hess(self, x):
        x = np.asarray(x, float)
        a = np.asarray(self.semi_axes)
        h = np.diag(-2.0 * self._scale / a**2)
        return np.broadcast_to(h, x.shape[:-1] + h.shape).copy()

    def __call__(self, x):
        return self.value(x)


@dataclass(frozen=True)
class Plane:
    """Affine n.(x - x0); the zero set is a line/plane."""

    normal: tuple[float, ...]
    offset_point: tuple[float, ...]

    @property
    def dimension(self) -> int:
        return len(self.normal)

    def value(self, x):
        return (np.asarray(x, float) - np.asarray(self.offset_point)) @ np.asarray(self.normal, float)

    def grad(self, x):
        x = np.asarray(x, float)
        return np.broadcast_to(np.asarray(self.normal, float), x.shape).copy()

    def hess(self, x):
        x = np.asarray(x, float)
        d = self.dimension
        return np.zeros(x.shape[:-1] + (d, d))

    def __call__(self, x):
        return self.value(x)


@dataclass(frozen=True)
class Constant:
    level: float
    dim: int = 2

    @property
    def dimension(self) -> int:
        return self.dim

    def value(self, x):
        x = np.asarray(x, float)
        return np.full(x.shape[:-1], float(self.level))

    def grad(self, x):
        return np.zeros_like(np.asarray(x, float))

    def hess(self, x):
        x = np.asarray(x, float)
        return np.zeros(x.shape[:-1] + (self.dim, self.dim))

    def __call__(self, x):
        return self.value(x)


def make_shape(kind: str, **params):
    kinds = {"circle": Sphere, "sphere": Sphere, "ellipse": Ellipsoid, "plane": Plane, "constant": Constant}
    try:
        cls = kinds[kind]
    except KeyError:
        raise ValueError(f"unknown initial shape {kind!r}") from None
    return cls(**params)
