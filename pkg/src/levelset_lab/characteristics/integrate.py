"""Batched integration of characteristics, with optional variational
equations and the autonomized energy variable.

Markers are integrated together as one state array of shape
(N, 2d+1 [+ (2d+1) d + 1] [+ 1]): position, covector, value, then the
flattened Jacobian d(x, p, phi)/d xi and log det of the plain flow map,
then the energy variable r.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..domain_flow.fields import VelocityField
from ..domain_flow.flow import ESCAPE_TOL
from ..domain_flow.ode import OdeOptions, integrate
from ..errors import DegenerateGradient, DomainEscape, TubeDegenerate
from .hamiltonian import SourceMode, characteristic_rhs, hamiltonian, hamiltonian_dphi, hamiltonian_dt

FD_STEP = 1e-6
P_MIN = 1e-10


@dataclass(frozen=True)
class CharacteristicState:
    x: np.ndarray
    p: np.ndarray
    phi: float


@dataclass
class CharacteristicBundle:
    """Trajectories of N markers sampled at shared output times.

    Arrays are indexed [time, marker, ...]. ``active`` is False for
    markers frozen after leaving the domain or the tube's validity region.
    """

    times: np.ndarray
    x: np.ndarray
    p: np.ndarray
    phi: np.ndarray
    jac: np.ndarray | None
    energy: np.ndarray | None
    active: np.ndarray
    flow_logdet: np.ndarray | None = None
    frozen_time: np.ndarray | None = None
    frozen_phi: np.ndarray | None = None

    @property
    def dimension(self) -> int:
        return self.x.shape[-1]

    @property
    def dx_dxi(self) -> np.ndarray | None:
        return None if self.jac is None else self.jac[..., : self.dimension, :]

    @property
    def dp_dxi(self) -> np.ndarray | None:
        d = self.dimension
        return None if self.jac is None else self.jac[..., d : 2 * d, :]

    @property
    def dphi_dxi(self) -> np.ndarray | None:
        return None if self.jac is None else self.jac[..., 2 * self.dimension, :]

    def det_dx_dxi(self) -> np.ndarray | None:
        return None if self.jac is None else np.linalg.det(self.dx_dxi)

    def fold_ratio(self) -> np.ndarray | None:
        """det(dx/dxi) relative to the plain flow map's Jacobian determinant.

        Stays 1 on the interface; drops to 0 where characteristics cross.
        """
        if self.jac is None:
            return None
        return self.det_dx_dxi() * np.exp(-self.flow_logdet)

    def state(self, k: int, i: int) -> CharacteristicState:
        return CharacteristicState(self.x[k, i].copy(), self.p[k, i].copy(), float(self.phi[k, i]))


def _split(z: np.ndarray, d: int):
    return z[..., :d], z[..., d : 2 * d], z[..., 2 * d]


def packed_rhs(mode: SourceMode, field: VelocityField, t: float, z: np.ndarray) -> np.ndarray:
    """Characteristic RHS on packed (..., 2d+1) states."""
    d = (z.shape[-1] - 1) // 2
    dx, dp, dphi = characteristic_rhs(mode, field, t, *_split(z, d))
    return np.concatenate([dx, dp, dphi[..., None]], axis=-1)


def variational_rhs(mode: SourceMode, field: VelocityField, t: float, z: np.ndarray, jac: np.ndarray) -> np.ndarray:
    """d/ds of J = d z / d xi, by central directional differences of the RHS.

    Each column of J is normalized before differencing so the step is
    relative to the state scale, then the result is rescaled. All 2d
    perturbed states go through one batched RHS call.
    """
    n, _, d = jac.shape
    nrm = np.linalg.norm(jac, axis=1, keepdims=True)
    u = jac / np.where(nrm > 0, nrm, 1.0)
    # (2, d, n, ncore): +/- perturbation per column
    shifted = z[None, None] + FD_STEP * np.array([1.0, -1.0])[:, None, None, None] * np.moveaxis(u, -1, 0)[None]
    f = packed_rhs(mode, field, t, shifted.reshape(-1, z.shape[-1])).reshape(shifted.shape)
    diff = (f[0] - f[1]) / (2 * FD_STEP)  # (d, n, ncore)
    return np.moveaxis(diff, 0, -1) * nrm


def initial_jacobian(grad_phi0: np.ndarray, hess_phi0: np.ndarray) -> np.ndarray:
    """[I; Hess phi0; grad phi0^T], shape (N, 2d+1, d)."""
    n, d = grad_phi0.shape
    jac = np.zeros((n, 2 * d + 1, d))
    jac[:, :d, :] = np.eye(d)
    jac[:, d : 2 * d, :] = hess_phi0
    jac[:, 2 * d, :] = grad_phi0
    return jac


def integrate_characteristics(
    mode: SourceMode,
    field: VelocityField,
    x0,
    p0,
    phi0,
    t0: float,
    t1: float,
    opts: OdeOptions = OdeOptions(),
    with_variational: bool = False,
    hess0=None,
    jac0=None,
    output_times: Sequence[float] | None = None,
    track_energy: bool = False,
    energy0=None,
    freeze: np.ndarray | None = None,
    fold_threshold: float = 0.0,
    flow_logdet0=None,
) -> CharacteristicBundle:
    """Integrate N characteristics from t0 to t1.

    ``freeze`` marks markers that are frozen (instead of raising) when they
    leave the domain, lose their gradient, or fold: fold ratio at or below
    ``fold_threshold``. Every marker with det(dx/dxi) <= 0 has folded.
    Markers not marked freezable raise DomainEscape, DegenerateGradient or
    TubeDegenerate instead.
    """
    x0 = np.atleast_2d(np.asarray(x0, float))
    n, d = x0.shape
    p0 = np.asarray(p0, float).reshape(n, d)
    phi0 = np.asarray(phi0, float).reshape(n)
    if not t1 > t0:
        raise ValueError("integration requires t1 > t0")
    ncore = 2 * d + 1
    blocks = [x0, p0, phi0[:, None]]
    if with_variational:
        if jac0 is None:
            if hess0 is None:
                raise ValueError("variational integration needs hess0 or jac0")
            jac0 = initial_jacobian(p0, np.asarray(hess0, float).reshape(n, d, d))
        blocks.append(np.asarray(jac0, float).reshape(n, ncore * d))
        blocks.append(np.zeros((n, 1)) if flow_logdet0 is None else np.asarray(flow_logdet0, float).reshape(n, 1))
    if track_energy:
        if energy0 is None:
            energy0 = -hamiltonian(mode, field, t0, x0, p0, phi0)
        blocks.append(np.asarray(energy0, float).reshape(n, 1))
    y0 = np.concatenate(blocks, axis=1)
    jac_sl = slice(ncore, ncore + ncore * d) if with_variational else None
    ld_col = ncore + ncore * d
    active = np.ones(n, bool)
    frozen_time = np.full(n, np.inf)
    frozen_phi = np.full(n, np.nan)
    may_freeze = np.zeros(n, bool) if freeze is None else np.asarray(freeze, bool).copy()
    domain = field.domain

    def rhs(t, y):
        out = np.zeros_like(y)
        if not active.any():
            return out
        ya = y[active]
        z = ya[:, :ncore]
        f = np.empty_like(ya)
        f[:, :ncore] = packed_rhs(mode, field, t, z)
        if with_variational:
            jac = ya[:, jac_sl].reshape(-1, ncore, d)
            f[:, jac_sl] = variational_rhs(mode, field, t, z, jac).reshape(len(ya), ncore * d)
            f[:, ld_col] = np.trace(field.jacobian(t, z[:, :d]), axis1=-2, axis2=-1)
        if track_energy:
            x, p, phi = _split(z, d)
            r = ya[:, -1]
            f[:, -1] = -hamiltonian_dt(mode, field, t, x, p, phi) - hamiltonian_dphi(mode, field, t, x, p) * r
        out[active] = f
        return out

    def post(t, y):
        x = y[:, :d]
        bad_escape = domain.outside_distance(x) > ESCAPE_TOL
        pn = np.linalg.norm(y[:, d : 2 * d], axis=1)
        bad_grad = (pn < P_MIN) if mode.kind != "linear_transport" else np.zeros(n, bool)
        bad_fold = np.zeros(n, bool)
        if with_variational:
            det = np.linalg.det(y[:, jac_sl].reshape(n, ncore, d)[:, :d, :])
            bad_fold = (det <= 0) | (may_freeze & (det * np.exp(-y[:, ld_col]) <= fold_threshold))
        for bad, exc, what in (
            (bad_escape, DomainEscape, "left the domain"),
            (bad_grad, DegenerateGradient, f"has |p| < {P_MIN:g}"),
            (bad_fold, TubeDegenerate, "has det(dx/dxi) <= 0"),
        ):
            hit = bad & active
            if np.any(hit & ~may_freeze):
                i = int(np.flatnonzero(hit & ~may_freeze)[0])
                raise exc(f"marker {i} {what} at t={t:.6g}")
            active[hit] = False
            frozen_time[hit] = t
            frozen_phi[hit] = y[hit, 2 * d]
        y[:, :d] = domain.clamp(x)
        return y

    times, states = integrate(rhs, y0, t0, t1, opts, output_times=output_times, post_step=post)
    ys = np.stack(states)
    jac = ys[:, :, jac_sl].reshape(len(times), n, ncore, d) if with_variational else None
    return CharacteristicBundle(
        times=times,
        x=ys[:, :, :d],
        p=ys[:, :, d : 2 * d],
        phi=ys[:, :, 2 * d],
        jac=jac,
        energy=ys[:, :, -1] if track_energy else None,
        active=active.copy(),
        flow_logdet=ys[:, :, ld_col] if with_variational else None,
        frozen_time=frozen_time,
        frozen_phi=frozen_phi,
    )


def integrate_characteristic(
    mode: SourceMode,
    field: VelocityField,
    state0: CharacteristicState,
    t0: float,
    t1: float,
    opts: OdeOptions = OdeOptions(),
    with_variational: bool = False,
    hess0=None,
    output_times: Sequence[float] | None = None,
) -> CharacteristicBundle:
    """Single-characteristic convenience wrapper (a bundle with N = 1)."""
    return integrate_characteristics(
        mode,
        field,
        state0.x,
        state0.p,
        state0.phi,
        t0,
        t1,
        opts,
        with_variational=with_variational,
        hess0=hess0,
        output_times=output_times,
        track_energy=True,
    )


def energy_residual(mode: SourceMode, field: VelocityField, bundle: CharacteristicBundle) -> np.ndarray:
    """|r + H| at every stored (time, marker); zero along exact characteristics."""
    if bundle.energy is None:
        raise ValueError("bundle was integrated without the energy variable")
    out = np.empty_like(bundle.phi)
    for k, t in enumerate(bundle.times):
        out[k] = np.abs(bundle.energy[k] + hamiltonian(mode, field, t, bundle.x[k], bundle.p[k], bundle.phi[k]))
    return out


def contact_residual(bundle: CharacteristicBundle) -> np.ndarray:
    """max_i |dphi/dxi_i - p . dx/dxi_i| at every stored (time, marker)."""
    if bundle.jac is None:
        raise ValueError("bundle was integrated without variational equations")
    lhs = bundle.dphi_dxi
    rhs = np.einsum("...j,...ji->...i", bundle.p, bundle.dx_dxi)
    return np.max(np.abs(lhs - rhs), axis=-1)
