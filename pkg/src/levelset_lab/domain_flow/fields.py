"""Analytic velocity fields of the form v(t, x) = g(t) V(x).

Fields are declared symbolically; the Jacobian and second-derivative
tensors are produced by sympy and lambdified to numpy, so the derivatives
are exact rather than finite-differenced.
"""

from __future__ import annotations

from functools import cached_property
from typing import Sequence

import numpy as np
import sympy as sp

from .domain import DomainSpec

_T = sp.Symbol("t", real=True)


def _coords(d: int):
    return sp.symbols(f"x0:{d}", real=True)


def _compile(exprs, args):
    """One lambdified function returning every entry, with shared subexpressions."""
    return sp.lambdify(args, list(exprs), modules="numpy", cse=True)


class VelocityField:
    """Smooth velocity field with analytic derivatives.

    ``jacobian`` entry ``[i, j]`` is dv_i/dx_j; ``second_derivs`` entry
    ``[i, j, k]`` is d2 v_i / dx_j dx_k.
    """

    def __init__(
        self,
        id: str,
        domain: DomainSpec,
        spatial: Sequence[sp.Expr],
        time_factor: sp.Expr | None = None,
        xs=None,
    ):
        d = domain.dimension
        if len(spatial) != d:
            raise ValueError("need one velocity component per dimension")
        self.id = id
        self.domain = domain
        self.dimension = d
        xs = tuple(xs) if xs is not None else _coords(d)
        self._xs = xs
        self.spatial_exprs = [sp.sympify(e) for e in spatial]
        g = sp.Integer(1) if time_factor is None else sp.sympify(time_factor)
        self.time_factor_expr = g
        self.is_steady = time_factor is None
        self._g = sp.lambdify(_T, g, modules="numpy")
        self._g_rate = sp.lambdify(_T, sp.diff(g, _T), modules="numpy")
        V = self.spatial_exprs
        self._v = _compile(V, xs)
        self._jac = _compile([sp.diff(V[i], xs[j]) for i in range(d) for j in range(d)], xs)
        self._hess = _compile(
            [sp.diff(V[i], xs[j], xs[k]) for i in range(d) for j in range(d) for k in range(d)], xs
        )

    def __repr__(self):
        return f"VelocityField({self.id!r}, d={self.dimension})"

    @staticmethod
    def _fill(func, x, shape):
        x = np.asarray(x, float)
        out = np.empty(x.shape[:-1] + (int(np.prod(shape)),))
        args = [x[..., i] for i in range(x.shape[-1])]
        # piecewise expressions evaluate every branch; unused ones may divide by zero
        with np.errstate(divide="ignore", invalid="ignore"):
            for k, entry in enumerate(func(*args)):
                out[..., k] = entry
        return out.reshape(x.shape[:-1] + shape)

    def time_factor(self, t: float) -> float:
        return float(self._g(t))

    def time_factor_rate(self, t: float) -> float:
        return float(self._g_rate(t))

    def spatial(self, x) -> np.ndarray:
        return self._fill(self._v, x, (self.dimension,))

    def spatial_jacobian(self, x) -> np.ndarray:
        d = self.dimension
        return self._fill(self._jac, x, (d, d))

    def spatial_second_derivs(self, x) -> np.ndarray:
        d = self.dimension
        return self._fill(self._hess, x, (d, d, d))

    def eval(self, t: float, x) -> np.ndarray:
        return self.time_factor(t) * self.spatial(x)

    def jacobian(self, t: float, x) -> np.ndarray:
        return self.time_factor(t) * self.spatial_jacobian(x)

    def second_derivs(self, t: float, x) -> np.ndarray:
        return self.time_factor(t) * self.spatial_second_derivs(x)

    def eval_dt(self, t: float, x) -> np.ndarray:
        """Partial time derivative of v."""
        return self.time_factor_rate(t) * self.spatial(x)

    def jacobian_dt(self, t: float, x) -> np.ndarray:
        return self.time_factor_rate(t) * self.spatial_jacobian(x)

    @cached_property
    def lipschitz_bound(self) -> float:
        """sup |dv_i/dx_j| estimated on a dense lattice of the domain."""
        lo, hi = self.domain.bounding_box
        per_axis = 201 if self.dimension == 2 else 41
        axes = [np.linspace(a, b, per_axis) for a, b in zip(lo, hi)]
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, self.dimension)
        pts = pts[self.domain.contains(pts)]
        jmax = float(np.max(np.abs(self.spatial_jacobian(pts)))) if len(pts) else 0.0
        if self.is_steady:
            gmax = 1.0
        else:
            gmax = float(np.max(np.abs(np.broadcast_to(self._g(np.linspace(0.0, 10.0, 2001)), (2001,)))))
        return jmax * gmax


def _rotation_generator(d: int) -> sp.Matrix:
    if d == 2:
        return sp.Matrix([[0, -1], [1, 0]])
    return sp.Matrix([[0, -1, 0], [1, 0, 0], [0, 0, 0]])


def zero_field(domain: DomainSpec) -> VelocityField:
    return VelocityField("zero", domain, [0] * domain.dimension)


def rotation(domain: DomainSpec, center=None, omega: float = 1.0) -> VelocityField:
    """Rigid rotation about ``center`` (about the x2-axis in 3D)."""
    d = domain.dimension
    xs = _coords(d)
    c = center if center is not None else (domain.center or (0.5,) * d)
    y = sp.Matrix([xs[i] - c[i] for i in range(d)])
    v = sp.nsimplify(omega) * _rotation_generator(d) * y
    return VelocityField("rotation", domain, list(v), xs=xs)


def rotation_bump(domain: DomainSpec, center=None, omega: float = 1.0, radius: float = 0.48) -> VelocityField:
    """Differential rotation omega (1 - r^2/R^2)^4 about ``center``, zero for r >= R.

    The bump is a polynomial inside R and C3 across it, so finite-difference
    checks of the second derivatives hold everywhere.
    """
    d = domain.dimension
    xs = _coords(d)
    c = center if center is not None else (0.5,) * d
    y = sp.Matrix([xs[i] - c[i] for i in range(d)])
    r2 = sum(yi**2 for yi in y)
    R2 = sp.nsimplify(radius) ** 2
    bump = sp.Piecewise(((1 - r2 / R2) ** 4, r2 < R2), (0, True))
    v = sp.nsimplify(omega) * bump * (_rotation_generator(d) * y)
    return VelocityField("rotation_bump", domain, list(v), xs=xs)


def vortex(domain: DomainSpec, period: float | None = None) -> VelocityField:
    """Single-vortex deformation field on the unit box (LeVeque's field in 3D).

    With ``period`` the field is multiplied by cos(pi t / period), so the
    flow reverses and returns every point to its start at t = period.
    """
    d = domain.dimension
    xs = _coords(d)
    pi = sp.pi
    if d == 2:
        x, y = xs
        spatial = [-sp.sin(pi * x) ** 2 * sp.sin(2 * pi * y), sp.sin(pi * y) ** 2 * sp.sin(2 * pi * x)]
    else:
        x, y, z = xs
        spatial = [
            2 * sp.sin(pi * x) ** 2 * sp.sin(2 * pi * y) * sp.sin(2 * pi * z),
            -sp.sin(2 * pi * x) * sp.sin(pi * y) ** 2 * sp.sin(2 * pi * z),
            -sp.sin(2 * pi * x) * sp.sin(2 * pi * y) * sp.sin(pi * z) ** 2,
        ]
    g = None if period is None else sp.cos(pi * _T / sp.nsimplify(period))
    return VelocityField("vortex", domain, spatial, time_factor=g, xs=xs)


def shear(domain: DomainSpec, gamma: float = 1.0) -> VelocityField:
    """u = gamma/(2 pi) sin^2(pi x) sin(2 pi y) along the first axis; other components zero.

    Scaled so the shear rate |du/dy| at the box centre equals gamma.
    """
    d = domain.dimension
    xs = _coords(d)
    u = sp.nsimplify(gamma) / (2 * sp.pi) * sp.sin(sp.pi * xs[0]) ** 2 * sp.sin(2 * sp.pi * xs[1])
    return VelocityField("shear", domain, [u] + [0] * (d - 1), xs=xs)


def radial_outward(domain: DomainSpec, center=None) -> VelocityField:
    """v = x - c. Violates boundary subtangentiality; kept as a negative control."""
    d = domain.dimension
    xs = _coords(d)
    c = center if center is not None else (domain.center or (0.5,) * d)
    return VelocityField("radial_outward", domain, [xs[i] - c[i] for i in range(d)], xs=xs)


FIELD_IDS = ("zero", "rotation", "rotation_bump", "vortex", "shear")


def make_field(field_id: str, domain: DomainSpec, **params) -> VelocityField:
    factories = {
        "zero": zero_field,
        "rotation": rotation,
        "rotation_bump": rotation_bump,
        "vortex": vortex,
        "shear": shear,
        "radial_outward": radial_outward,
    }
    try:
        factory = factories[field_id]
    except KeyError:
        raise ValueError(f"unknown velocity field {field_id!r}") from None
    return factory(domain, **params)


def builtin_fields(dimension: int) -> list[VelocityField]:
    """Registered fields, each paired with a domain on which it is boundary-subtangential."""
    if dimension not in (2, 3):
        raise ValueError("dimension must be 2 or 3")
    box = DomainSpec.unit_box(dimension)
    ball = DomainSpec.ball((0.5,) * dimension, 0.5)
    return [
        zero_field(box),
        rotation(ball),
        rotation_bump(box),
        vortex(box),
        vortex(box, period=2.0),
        shear(box),
    ]
