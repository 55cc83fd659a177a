"""Explicit sub- and supersolutions that pin the zero level-set.

With f the transported initial data and S a switching rate,
    rho(t, x)  = f(t, x) exp( int_0^t S(s, X(s, t, x)) ds)
    rho~(t, x) = f(t, x) exp(-int_0^t S(s, X(s, t, x)) ds)
satisfy rho <= phi <= rho~ for the modified equation whenever |R| <= V0.
S is -V0 on the closed positive phase, V0 on the negative phase away from
the boundary and 0 next to the boundary.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..domain_flow.fields import VelocityField
from ..domain_flow.flow import domain_guard
from ..domain_flow.ode import OdeOptions, integrate
from .cutoffs import smoothstep
from .grid import GridField

ZERO_TOL = 1e-12


@dataclass(frozen=True)
class BarrierConfig:
    """V0 and the collar width eps(T) defining the switching rate S."""

    v0: float
    eps_T: float

    def __post_init__(self):
        if self.v0 < 0:
            raise ValueError("v0 must be >= 0")
        if not self.eps_T > 0:
            raise ValueError("eps_T must be > 0")


def switching_rate(cfg: BarrierConfig, sign, dist):
    """S from the phase sign (+1, 0, -1) and the distance to the boundary.

    Exact zeros of the reference solution get S = 0.
    """
    sign = np.asarray(sign, float)
    collar = cfg.v0 * (1.0 - smoothstep(0.5 * cfg.eps_T, cfg.eps_T, dist))
    return np.where(sign > 0, -cfg.v0, np.where(sign < 0, collar, 0.0))


def _phase_sign(f):
    f = np.asarray(f, float)
    return np.where(np.abs(f) <= ZERO_TOL, 0.0, np.sign(f))


def barrier_S(field: VelocityField, phi0, cfg: BarrierConfig, t: float, x, opts: OdeOptions = OdeOptions()):
    """S(t, x), with the phase decided by the transported initial data."""
    f, _ = _transport_with_rate(field, phi0, cfg, t, x, opts)
    x = np.asarray(x, float)
    return switching_rate(cfg, _phase_sign(f), field.domain.boundary_distance(x))


def _transport_with_rate(field: VelocityField, phi0, cfg: BarrierConfig, t: float, x, opts: OdeOptions):
    """(f(t, x), int_0^t S(s, X(s, t, x)) ds) by one backward solve.

    Trajectories never cross the interface, so the phase sign is fixed along
    each one and can be read off phi0 at the foot.
    """
    x = np.asarray(x, float)
    single = x.ndim == 1
    pts = np.atleast_2d(x)
    d = pts.shape[1]
    domain = field.domain
    if t == 0:
        f = np.asarray(phi0(pts), float)
        zeros = np.zeros(len(pts))
        return (f[0], zeros[0]) if single else (f, zeros)
    guard = domain_guard(domain)

    def rhs(s, y):
        out = np.empty_like(y)
        out[:, :d] = field.eval(s, y[:, :d])
        out[:, d] = switching_rate(cfg, -1.0, domain.boundary_distance(y[:, :d]))
        return out

    # one backward solve carries the negative-phase integral; on the
    # positive phase S is the constant -V0 and zeros give S = 0
    y0 = np.hstack([pts, np.zeros((len(pts), 1))])
    _, (y_end,) = integrate(rhs, y0, t, 0.0, opts, post_step=guard)
    f = np.asarray(phi0(y_end[:, :d]), float)
    sign = _phase_sign(f)
    integral = np.where(sign > 0, -cfg.v0 * t, np.where(sign < 0, -y_end[:, d], 0.0))
    return (f[0], integral[0]) if single else (f, integral)


def barrier_pair(field: VelocityField, phi0, cfg: BarrierConfig, t: float, x, opts: OdeOptions = OdeOptions()):
    """(f, rho, rho~) at (t, x)."""
    f, integral = _transport_with_rate(field, phi0, cfg, t, x, opts)
    return f, f * np.exp(integral), f * np.exp(-integral)


def barrier_rho(field: VelocityField, phi0, cfg: BarrierConfig, t: float, x, opts: OdeOptions = OdeOptions()):
    return barrier_pair(field, phi0, cfg, t, x, opts)[1]


def barrier_rho_tilde(field: VelocityField, phi0, cfg: BarrierConfig, t: float, x, opts: OdeOptions = OdeOptions()):
    return barrier_pair(field, phi0, cfg, t, x, opts)[2]


@dataclass(frozen=True)
class EnvelopeReport:
    times: np.ndarray
    samples: np.ndarray
    violations: np.ndarray
    max_excess: np.ndarray
    tol: float

    @property
    def violation_fraction(self) -> float:
        total = int(np.sum(self.samples))
        return float(np.sum(self.violations)) / total if total else 0.0

    @property
    def passed(self) -> bool:
        return int(np.sum(self.violations)) == 0


def envelope_check(
    snapshots: Sequence[GridField],
    field: VelocityField,
    phi0,
    cfg: BarrierConfig,
    tol: float,
    opts: OdeOptions = OdeOptions(),
) -> EnvelopeReport:
    """Count grid nodes with phi outside [rho - tol, rho~ + tol]."""
    if tol < 0:
        raise ValueError("tol must be >= 0")
    times, samples, violations, excess = [], [], [], []
    for snap in snapshots:
        pts = snap.spec.nodes.reshape(-1, snap.spec.dimension)
        _, rho, rho_t = barrier_pair(field, phi0, cfg, snap.t, pts, opts)
        phi = snap.values.reshape(-1)
        over = np.maximum(rho - phi, phi - rho_t)
        times.append(snap.t)
        samples.append(len(phi))
        violations.append(int(np.sum(over > tol)))
        excess.append(float(np.max(over)))
    return EnvelopeReport(np.array(times), np.array(samples), np.array(violations), np.array(excess), float(tol))
