"""Zero-contour extraction on regular lattices.

Nodes are classified by ``value >= 0``. Every lattice edge whose end
nodes fall in different classes contributes one crossing point by linear
interpolation. In 2D the crossings are also linked into segments
(marching squares, saddles resolved by the cell mean); in 3D only the
vertex set is produced, which is the vertex set of marching cubes.
"""

from __future__ import annotations

import numpy as np


def edge_crossings(values: np.ndarray, lower, spacing: float):
    """Crossing points of every sign-changing lattice edge.

    Returns ``(points, index)`` where ``index[axis]`` is an integer array of
    the edge-array shape holding the point id of each crossing edge (-1
    where there is none).
    """
    values = np.asarray(values, float)
    d = values.ndim
    lower = np.asarray(lower, float)
    pos = values >= 0
    points = []
    index = []
    count = 0
    for axis in range(d):
        a = [slice(None)] * d
        b = [slice(None)] * d
        a[axis] = slice(None, -1)
        b[axis] = slice(1, None)
        va, vb = values[tuple(a)], values[tuple(b)]
        cross = pos[tuple(a)] != pos[tuple(b)]
        ids = np.full(va.shape, -1, dtype=np.int64)
        idx = np.argwhere(cross)
        ids[cross] = np.arange(count, count + len(idx))
        count += len(idx)
        fa, fb = va[cross], vb[cross]
        frac = fa / (fa - fb)
        pts = lower + spacing * idx.astype(float)
        pts[:, axis] += spacing * frac
        points.append(pts)
        index.append(ids)
    pts = np.concatenate(points) if points else np.zeros((0, d))
    return pts, index


def zero_nodes(values: np.ndarray, lower, spacing: float) -> np.ndarray:
    """Nodes where the value is exactly zero (not always on a crossing edge)."""
    idx = np.argwhere(np.asarray(values) == 0.0)
    return np.asarray(lower, float) + spacing * idx.astype(float)


def marching_squares(values: np.ndarray, lower, spacing: float):
    """Zero contour of a 2D lattice as ``(points, segments)``.

    ``segments`` is an (M, 2) array of point ids.
    """
    values = np.asarray(values, float)
    if values.ndim != 2:
        raise ValueError("marching squares needs a 2D lattice")
    pts, (ex, ey) = edge_crossings(values, lower, spacing)
    # cell (i, j) edges: e0 bottom ex[i, j], e1 right ey[i+1, j], e2 top ex[i, j+1], e3 left ey[i, j]
    e = np.stack([ex[:, :-1], ey[1:, :], ex[:, 1:], ey[:-1, :]], axis=-1)
    hits = e >= 0
    nhit = hits.sum(axis=-1)
    segs = []
    two = nhit == 2
    if np.any(two):
        ids = e[two]
        mask = hits[two]
        # the two crossing edge ids in edge order
        order = np.argsort(~mask, axis=1, kind="stable")[:, :2]
        segs.append(np.take_along_axis(ids, order, axis=1))
    four = nhit == 4
    if np.any(four):
        ci, cj = np.nonzero(four)
        c0 = values[ci, cj]
        c1 = values[ci + 1, cj]
        c2 = values[ci + 1, cj + 1]
        c3 = values[ci, cj + 1]
        mean_pos = 0.25 * (c0 + c1 + c2 + c3) >= 0
        c0_pos = c0 >= 0
        ids = e[four]
        # corner c0 and c2 share a class (saddle); cut off the corners of the
        # class that is not connected through the cell centre
        cut_c0_c2 = mean_pos != c0_pos
        first = np.where(cut_c0_c2[:, None], ids[:, [3, 0]], ids[:, [0, 1]])
        second = np.where(cut_c0_c2[:, None], ids[:, [1, 2]], ids[:, [2, 3]])
        segs.extend([first, second])
    segments = np.concatenate(segs).astype(np.int64) if segs else np.zeros((0, 2), np.int64)
    return pts, segments
