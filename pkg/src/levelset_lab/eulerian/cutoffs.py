"""Smooth cut-offs and the cut-off source term R(t, x, p)."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np

from ..characteristics.hamiltonian import SourceMode, sym
from ..domain_flow.domain import DomainSpec
from ..domain_flow.fields import VelocityField

P_BAND = (1.0 / 3.0, 2.0 / 3.0, 4.0 / 3.0, 5.0 / 3.0)
P_EPS = 1e-14
V0_SAFETY = 1.1


def smoothstep(a: float, b: float, r):
    """1 for r <= a, 0 for r >= b, quintic C2 monotone transition between."""
    if not a < b:
        raise ValueError("smoothstep requires a < b")
    s = np.clip((np.asarray(r, float) - a) / (b - a), 0.0, 1.0)
    return 1.0 - s**3 * (10.0 - 15.0 * s + 6.0 * s**2)


def smoothstep_derivative(a: float, b: float, r):
    s = (np.asarray(r, float) - a) / (b - a)
    inside = (s > 0) & (s < 1)
    sc = np.clip(s, 0.0, 1.0)
    return np.where(inside, -30.0 * sc**2 * (1.0 - sc) ** 2 / (b - a), 0.0)


@dataclass(frozen=True)
class CutoffConfig:
    """Cut-off parameters: the boundary collar eps(t) and the |p| knots.

    ``eps`` is a positive constant or a nonincreasing callable of t.
    ``alpha`` and ``beta`` set the eta3 knots 2(beta+alpha), 3(beta+alpha).
    """

    domain: DomainSpec
    eps: float | Callable[[float], float]
    alpha: float = 0.0
    beta: float | None = None

    def __post_init__(self):
        if not callable(self.eps) and not self.eps > 0:
            raise ValueError("eps must be > 0")

    @property
    def eps_is_constant(self) -> bool:
        return not callable(self.eps)

    def eps_at(self, t: float) -> float:
        e = float(self.eps(t)) if callable(self.eps) else float(self.eps)
        if not e > 0:
            raise ValueError(f"eps({t}) = {e} is not positive")
        return e

    @property
    def eta3_knots(self) -> tuple[float, float]:
        if self.beta is None:
            raise ValueError("eta3 needs beta")
        s = self.beta + self.alpha
        return 2.0 * s, 3.0 * s

    def eta1_from_distance(self, t: float, dist):
        e = self.eps_at(t)
        return 1.0 - smoothstep(2.0 * e, 3.0 * e, dist)

    def eta1(self, t: float, x):
        return self.eta1_from_distance(t, self.domain.boundary_distance(x))

    @staticmethod
    def eta2(r):
        a, b, c, d = P_BAND
        return (1.0 - smoothstep(a, b, r)) * smoothstep(c, d, r)

    @staticmethod
    def eta2_derivative(r):
        a, b, c, d = P_BAND
        return -smoothstep_derivative(a, b, r) * smoothstep(c, d, r) + (1.0 - smoothstep(a, b, r)) * smoothstep_derivative(
            c, d, r
        )

    def eta3(self, r):
        a, b = self.eta3_knots
        return smoothstep(a, b, r)

    def eta3_derivative(self, r):
        a, b = self.eta3_knots
        return smoothstep_derivative(a, b, r)

    @cached_property
    def preserving_lipschitz_factor(self) -> float:
        """max_r sqrt(eta2'(r)^2 + (2 eta2(r)/r)^2).

        |dR/dp| <= eta1 * this * ||D||: the radial and tangential parts of
        dR/dp are orthogonal and bounded by eta2' |q| and 2 eta2 |D phat - q phat| / r.
        """
        r = np.linspace(P_BAND[0], P_BAND[3], 200001)
        return float(np.max(np.hypot(self.eta2_derivative(r), 2.0 * self.eta2(r) / r)))

    @cached_property
    def bounding_lipschitz_factor(self) -> float:
        """max_r |eta3'(r)(beta - r) - eta3(r)|, the bound on |dR/dp| / eta1."""
        _, b = self.eta3_knots
        r = np.linspace(0.0, b, 200001)
        return float(np.max(np.abs(self.eta3_derivative(r) * (self.beta - r) - self.eta3(r))))

    @cached_property
    def bounding_sup(self) -> float:
        """sup_r eta3(r) |beta - r|."""
        _, b = self.eta3_knots
        r = np.linspace(0.0, b, 200001)
        return float(np.max(self.eta3(r) * np.abs(self.beta - r)))


def source_from_strain(mode: SourceMode, cut: CutoffConfig, strain, eta1, p):
    """R given the symmetric strain D (..., d, d), eta1 (...) and p (..., d)."""
    p = np.asarray(p, float)
    if mode.kind == "linear_transport":
        return np.zeros(p.shape[:-1])
    r = np.linalg.norm(p, axis=-1)
    if mode.kind == "grad_bounding":
        return eta1 * cut.eta3(r) * (mode.beta - r)
    safe = np.where(r > P_EPS, r, 1.0)
    phat = p / safe[..., None]
    q = np.where(r > P_EPS, np.einsum("...i,...ij,...j->...", phat, strain, phat), 0.0)
    return eta1 * cut.eta2(r) * q


def source_R(mode: SourceMode, field: VelocityField, cut: CutoffConfig, t: float, x, p):
    """Cut-off source factor R(t, x, p) of phi_t + v.grad phi = phi R."""
    x = np.asarray(x, float)
    strain = sym(field.jacobian(t, x))
    return source_from_strain(mode, cut, strain, cut.eta1(t, x), p)


def lipschitz_in_p(mode: SourceMode, cut: CutoffConfig, strain_norm, eta1):
    """Local bound on |dR/dp_i| given ||D||_2 and eta1 at the same points."""
    if mode.kind == "linear_transport":
        return np.zeros(np.shape(eta1))
    if mode.kind == "grad_bounding":
        return eta1 * cut.bounding_lipschitz_factor
    return eta1 * cut.preserving_lipschitz_factor * strain_norm


def spectral_norm_sym(strain):
    return np.max(np.abs(np.linalg.eigvalsh(strain)), axis=-1)


def measure_v0(
    mode: SourceMode,
    field: VelocityField,
    cut: CutoffConfig,
    T: float,
    per_axis: int | None = None,
    time_samples: int = 11,
) -> float:
    """1.1 x sup |R| over a lattice of x and a set of times.

    The sup over p is taken exactly: for grad_preserving it is
    eta1 * max |eig D| (eta2 peaks at 1, q ranges over the eigenvalues);
    for grad_bounding it is eta1 * sup_r eta3(r) |beta - r|.
    """
    if mode.kind == "linear_transport":
        return 0.0
    d = field.dimension
    per_axis = per_axis or (201 if d == 2 else 41)
    lo, hi = cut.domain.bounding_box
    axes = [np.linspace(a, b, per_axis) for a, b in zip(lo, hi)]
    x = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    ts = np.linspace(0.0, T, time_samples) if T > 0 else np.array([0.0])
    if mode.kind == "grad_bounding":
        eta1_max = max(float(np.max(cut.eta1(t, x))) for t in ts)
        return V0_SAFETY * eta1_max * cut.bounding_sup
    snorm = spectral_norm_sym(sym(field.spatial_jacobian(x)))
    best = 0.0
    for t in ts:
        g = abs(field.time_factor(float(t)))
        best = max(best, float(np.max(cut.eta1(t, x) * g * snorm)))
    return V0_SAFETY * best


def simple_mode_bound(beta: float, alpha: float) -> float:
    """2 beta + 3 alpha: sup of eta3(r) |beta - r| allowed by the eta3 knots."""
    return 2.0 * beta + 3.0 * alpha


EPS_FRACTION = 0.25
MIN_CLEARANCE_CELLS = 3


def orbit_boundary_distance(field: VelocityField, points, T: float, samples: int = 41) -> float:
    """Smallest distance to the boundary reached by the flow orbits of points over [0, T]."""
    from ..domain_flow.flow import eval_flow_map

    pts = np.atleast_2d(np.asarray(points, float))
    best = float(np.min(field.domain.boundary_distance(pts)))
    if T > 0:
        for x in eval_flow_map(field, T, 0.0, pts, output_times=np.linspace(0.0, T, samples)[1:]):
            best = min(best, float(np.min(field.domain.boundary_distance(x))))
    return best


def default_eps(field: VelocityField, points, T: float, h: float | None = None) -> float:
    """A quarter of the interface orbit's distance to the boundary.

    With the grid spacing ``h`` given, orbits closer than three cells to the
    boundary are rejected.
    """
    from ..errors import ValidationError

    dist = orbit_boundary_distance(field, points, T)
    if h is not None and dist < MIN_CLEARANCE_CELLS * h:
        raise ValidationError(
            f"interface comes within {dist:.4g} of the boundary; at least {MIN_CLEARANCE_CELLS} cells ({MIN_CLEARANCE_CELLS * h:.4g}) are required"
        )
    if not dist > 0:
        raise ValidationError("interface touches the boundary")
    return EPS_FRACTION * dist
