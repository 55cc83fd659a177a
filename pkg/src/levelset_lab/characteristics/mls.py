"""Moving-least-squares reconstruction of scattered marker values.

Linear basis with an interpolating Gaussian weight
w(r) = exp(-(r/R)^2) / (r^2 + (1e-6 R)^2): the singular factor makes the
fit reproduce nodal values, while the Gaussian keeps it local. Queries
whose neighbours are too flat to fix a gradient get NaN.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

RADIUS_FACTOR = 3.0
SINGULAR_FRACTION = 1e-6
MIN_SPREAD = 0.25


@dataclass
class MlsFit:
    value: np.ndarray  # NaN where the neighbours do not span every direction
    gradient: np.ndarray
    condition: np.ndarray
    neighbours: np.ndarray


class MlsReconstructor:
    def __init__(self, points: np.ndarray, values: np.ndarray, radius: float | None = None):
        self.points = np.asarray(points, float)
        self.values = np.asarray(values, float)
        self.tree = cKDTree(self.points)
        self.radius = float(radius) if radius is not None else RADIUS_FACTOR * self.median_spacing()

    def median_spacing(self) -> float:
        if len(self.points) < 2:
            return np.inf
        dist, _ = self.tree.query(self.points, k=2)
        return float(np.median(dist[:, 1]))

    def fit(self, queries) -> MlsFit:
        q = np.atleast_2d(np.asarray(queries, float))
        m, d = q.shape
        value = np.full(m, np.nan)
        grad = np.full((m, d), np.nan)
        cond = np.full(m, np.inf)
        counts = np.zeros(m, dtype=np.int64)
        R = self.radius
        neighbour_lists = self.tree.query_ball_point(q, R)
        for i, nb in enumerate(neighbour_lists):
            counts[i] = len(nb)
            if len(nb) < d + 1:
                continue
            nb = np.asarray(nb)
            dx = (self.points[nb] - q[i]) / R  # scaled coordinates
            # neighbours strung along a curve cannot resolve the normal slope
            spread = np.linalg.svd(dx - dx.mean(axis=0), compute_uv=False)
            if spread[0] == 0 or spread[-1] < MIN_SPREAD * spread[0]:
                continue
            r2 = np.sum(dx**2, axis=1)
            w = np.exp(-r2) / (r2 + SINGULAR_FRACTION**2)
            basis = np.hstack([np.ones((len(nb), 1)), dx])
            sw = np.sqrt(w)[:, None]
            a = basis * sw
            b = self.values[nb] * sw[:, 0]
            # column equilibration keeps the condition number meaningful
            scale = np.linalg.norm(a, axis=0)
            scale[scale == 0] = 1.0
            coef, _, rank, sing = np.linalg.lstsq(a / scale, b, rcond=None)
            if rank < d + 1:
                continue
            coef = coef / scale
            value[i] = coef[0]
            grad[i] = coef[1:] / R
            cond[i] = sing[0] / sing[-1]
        return MlsFit(value, grad, cond, counts)

    def __call__(self, queries) -> np.ndarray:
        return self.fit(queries).value
