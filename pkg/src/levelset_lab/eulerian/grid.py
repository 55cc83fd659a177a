"""Uniform node grids, grid fields and their plain-text dumps."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import TextIO

import numpy as np

from ..domain_flow.domain import DomainSpec
from ..errors import NonFiniteState

MIN_CELLS = 8


@dataclass(frozen=True)
class GridSpec:
    """(n+1)^d nodes at lower + i h on a cubic box."""

    domain: DomainSpec
    n: int

    def __post_init__(self):
        if self.domain.boundary_kind != "box":
            raise ValueError("grids need a box domain")
        if self.n < MIN_CELLS:
            raise ValueError(f"n must be >= {MIN_CELLS}")
        lo, hi = self.domain.bounding_box
        widths = hi - lo
        if not np.allclose(widths, widths[0], rtol=1e-12, atol=0):
            raise ValueError("grid spacing must be identical across axes")

    @property
    def dimension(self) -> int:
        return self.domain.dimension

    @property
    def h(self) -> float:
        lo, hi = self.domain.bounding_box
        return float((hi[0] - lo[0]) / self.n)

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n + 1,) * self.dimension

    @property
    def lower(self) -> np.ndarray:
        return self.domain.bounding_box[0]

    @cached_property
    def nodes(self) -> np.ndarray:
        axes = [self.lower[i] + self.h * np.arange(self.n + 1) for i in range(self.dimension)]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)

    @cached_property
    def boundary_mask(self) -> np.ndarray:
        mask = np.zeros(self.shape, bool)
        for axis in range(self.dimension):
            idx = [slice(None)] * self.dimension
            idx[axis] = 0
            mask[tuple(idx)] = True
            idx[axis] = -1
            mask[tuple(idx)] = True
        return mask

    @property
    def interior(self) -> tuple[slice, ...]:
        return (slice(1, -1),) * self.dimension


@dataclass(frozen=True)
class GridField:
    t: float
    values: np.ndarray
    spec: GridSpec

    def __post_init__(self):
        if self.values.shape != self.spec.shape:
            raise ValueError(f"values shape {self.values.shape} does not match grid {self.spec.shape}")
        if not np.all(np.isfinite(self.values)):
            raise NonFiniteState(f"non-finite grid values at t={self.t:.6g}")


def write_grid(stream: TextIO, grid: GridField) -> None:
    """Header lines then one value per line in row-major (C) node order."""
    spec = grid.spec
    lo, hi = spec.domain.bounding_box
    stream.write("levelset-lab grid v1\n")
    stream.write(f"dimension {spec.dimension}\n")
    stream.write(f"n {spec.n}\n")
    stream.write("lower " + " ".join("%.17g" % v for v in lo) + "\n")
    stream.write("upper " + " ".join("%.17g" % v for v in hi) + "\n")
    stream.write("time %.17g\n" % grid.t)
    stream.write("values\n")
    np.savetxt(stream, grid.values.reshape(-1), fmt="%.17g")


def read_grid(stream: TextIO) -> GridField:
    header = stream.readline().strip()
    if header != "levelset-lab grid v1":
        raise ValueError(f"not a grid dump: {header!r}")
    meta = {}
    for line in stream:
        line = line.strip()
        if line == "values":
            break
        key, _, rest = line.partition(" ")
        meta[key] = rest
    d = int(meta["dimension"])
    n = int(meta["n"])
    lo = tuple(float(v) for v in meta["lower"].split())
    hi = tuple(float(v) for v in meta["upper"].split())
    spec = GridSpec(DomainSpec(d, lo, hi), n)
    values = np.loadtxt(stream, ndmin=1).reshape(spec.shape)
    return GridField(float(meta["time"]), values, spec)
