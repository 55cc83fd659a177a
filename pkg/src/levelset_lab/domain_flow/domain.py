"""Box and ball domains with closed-form boundary distance."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class DomainSpec:
    dimension: int
    lower: tuple[float, ...] = ()
    upper: tuple[float, ...] = ()
    boundary_kind: str = "box"
    center: tuple[float, ...] = ()
    radius: float = 0.0
    _lo: np.ndarray = field(init=False, repr=False, compare=False)
    _hi: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.dimension not in (2, 3):
            raise ValueError("dimension must be 2 or 3")
        if self.boundary_kind == "box":
            if len(self.lower) != self.dimension or len(self.upper) != self.dimension:
                raise ValueError("lower/upper must have one entry per dimension")
            if any(lo >= hi for lo, hi in zip(self.lower, self.upper)):
                raise ValueError("box requires lower[i] < upper[i]")
            lo, hi = np.array(self.lower, float), np.array(self.upper, float)
        elif self.boundary_kind == "ball":
            if len(self.center) != self.dimension:
                raise ValueError("center must have one entry per dimension")
            if not self.radius > 0:
                raise ValueError("ball requires radius > 0")
            c = np.array(self.center, float)
            lo, hi = c - self.radius, c + self.radius
        else:
            raise ValueError(f"unknown boundary kind {self.boundary_kind!r}")
        object.__setattr__(self, "_lo", lo)
        object.__setattr__(self, "_hi", hi)

    @classmethod
    def unit_box(cls, dimension: int) -> "DomainSpec":
        return cls(dimension, (0.0,) * dimension, (1.0,) * dimension)

    @classmethod
    def ball(cls, center, radius: float) -> "DomainSpec":
        center = tuple(float(c) for c in center)
        return cls(len(center), boundary_kind="ball", center=center, radius=float(radius))

    @property
    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        return self._lo.copy(), self._hi.copy()

    def outside_distance(self, x: np.ndarray) -> np.ndarray:
        """Euclidean distance to the closed domain (0 for points inside)."""
        x = np.asarray(x, float)
        if self.boundary_kind == "box":
            excess = np.maximum(self._lo - x, 0.0) + np.maximum(x - self._hi, 0.0)
            return np.linalg.norm(excess, axis=-1)
        r = np.linalg.norm(x - np.array(self.center), axis=-1)
        return np.maximum(r - self.radius, 0.0)

    def boundary_distance(self, x: np.ndarray) -> np.ndarray:
        """Unsigned distance to the boundary surface, for points inside or outside."""
        x = np.asarray(x, float)
        if self.boundary_kind == "box":
            inside = np.min(np.minimum(x - self._lo, self._hi - x), axis=-1)
            return np.where(inside >= 0.0, inside, self.outside_distance(x))
        r = np.linalg.norm(x - np.array(self.center), axis=-1)
        return np.abs(r - self.radius)

    def contains(self, x: np.ndarray, tol: float = 0.0) -> np.ndarray:
        return self.outside_distance(x) <= tol

    def clamp(self, x: np.ndarray) -> np.ndarray:
        """Nearest point of the closed domain."""
        x = np.asarray(x, float)
        if self.boundary_kind == "box":
            return np.clip(x, self._lo, self._hi)
        c = np.array(self.center)
        y = x - c
        r = np.linalg.norm(y, axis=-1, keepdims=True)
        scale = np.where(r > self.radius, self.radius / np.maximum(r, 1e-300), 1.0)
        return c + y * scale

    def sample_interior(self, rng: np.random.Generator, count: int, margin: float = 0.0) -> np.ndarray:
        if self.boundary_kind == "box":
            return rng.uniform(self._lo + margin, self._hi - margin, size=(count, self.dimension))
        c = np.array(self.center)
        direction = rng.normal(size=(count, self.dimension))
        direction /= np.linalg.norm(direction, axis=1, keepdims=True)
        r = (self.radius - margin) * rng.uniform(size=(count, 1)) ** (1.0 / self.dimension)
        return c + r * direction

    def sample_boundary(self, rng: np.random.Generator, count: int) -> np.ndarray:
        d = self.dimension
        if self.boundary_kind == "ball":
            direction = rng.normal(size=(count, d))
            direction /= np.linalg.norm(direction, axis=1, keepdims=True)
            return np.array(self.center) + self.radius * direction
        pts = rng.uniform(self._lo, self._hi, size=(count, d))
        axis = rng.integers(0, d, size=count)
        side = rng.integers(0, 2, size=count)
        rows = np.arange(count)
        pts[rows, axis] = np.where(side == 0, self._lo[axis], self._hi[axis])
        return pts
