"""Zero level-set extraction and Hausdorff distances between interfaces."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from ..contour import edge_crossings, marching_squares, zero_nodes
from ..errors import EmptyInterface
from ..eulerian.grid import GridField

SOURCES = ("grid_contour", "marker_cloud", "analytic")
_CHUNK = 2048


@dataclass(frozen=True)
class InterfaceSet:
    """Points on a zero level-set; 2D sets may carry polyline segments."""

    dimension: int
    points: np.ndarray
    source: str
    segments: np.ndarray | None = None

    def __post_init__(self):
        if self.source not in SOURCES:
            raise ValueError(f"source must be one of {SOURCES}")
        pts = np.asarray(self.points, float).reshape(-1, self.dimension)
        object.__setattr__(self, "points", pts)
        if self.segments is not None:
            segs = np.asarray(self.segments, np.int64).reshape(-1, 2)
            object.__setattr__(self, "segments", segs if len(segs) else None)

    def __len__(self) -> int:
        return len(self.points)

    @property
    def is_empty(self) -> bool:
        return len(self.points) == 0


def extract_interface(grid: GridField) -> InterfaceSet:
    """Crossing points of sign-changing grid edges, linearly interpolated.

    2D results are linked into segments (marching squares); 3D results are
    the marching-cubes vertex set. Nodes holding an exact zero are added.
    """
    spec = grid.spec
    if spec.dimension == 2:
        pts, segs = marching_squares(grid.values, spec.lower, spec.h)
    else:
        pts, _ = edge_crossings(grid.values, spec.lower, spec.h)
        segs = None
    zeros = zero_nodes(grid.values, spec.lower, spec.h)
    if len(zeros):
        # an exact zero also ends each crossing edge at that node; keep one copy
        pts = np.vstack([pts, zeros])
    return InterfaceSet(spec.dimension, pts, "grid_contour", segs)


def _point_segment_distance(q: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """min over segments of the distance from each q; q (N, d), a/b (M, d)."""
    ab = b - a
    ll = np.einsum("ij,ij->i", ab, ab)
    safe = np.where(ll > 0, ll, 1.0)
    out = np.empty(len(q))
    for s in range(0, len(q), _CHUNK):
        qc = q[s : s + _CHUNK]
        aq = qc[:, None, :] - a[None]
        lam = np.clip(np.einsum("nmd,md->nm", aq, ab) / safe, 0.0, 1.0)
        diff = aq - lam[..., None] * ab[None]
        out[s : s + _CHUNK] = np.sqrt(np.min(np.einsum("nmd,nmd->nm", diff, diff), axis=1))
    return out


def distance_to_set(q: np.ndarray, target: InterfaceSet) -> np.ndarray:
    """Distance from each q to the target's polyline, or to its points."""
    q = np.asarray(q, float).reshape(-1, target.dimension)
    if target.segments is not None:
        segs = target.segments
        return _point_segment_distance(q, target.points[segs[:, 0]], target.points[segs[:, 1]])
    dist, _ = cKDTree(target.points).query(q)
    return dist


def hausdorff(a: InterfaceSet, b: InterfaceSet) -> float:
    """Symmetric Hausdorff distance.

    Points of one set are measured against the other set's segments when it
    has them, so a polyline is not penalized for its vertex spacing.
    """
    if a.is_empty or b.is_empty:
        raise EmptyInterface("Hausdorff distance needs two nonempty interfaces")
    if a.dimension != b.dimension:
        raise ValueError("interfaces live in different dimensions")
    return float(max(np.max(distance_to_set(a.points, b)), np.max(distance_to_set(b.points, a))))


def marker_interface(tube, t: float) -> InterfaceSet:
    """Interface markers of a tube at a stored time, with their segments in 2D."""
    segs = tube.interface_segments() if tube.dimension == 2 else None
    return InterfaceSet(tube.dimension, tube.interface_points(t), "marker_cloud", segs)
