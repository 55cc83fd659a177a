"""Hamiltonians of the three level-set equations and their characteristic systems.

Every function is batched: ``x`` and ``p`` have shape (..., d), ``phi``
shape (...). The equation is phi_t + H(t, x, grad phi, phi) = 0 with
H = v.p - phi R.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..domain_flow.fields import VelocityField
from ..errors import DegenerateGradient

MODES = ("linear_transport", "grad_preserving", "grad_bounding")
P_FLOOR = 1e-12


@dataclass(frozen=True)
class SourceMode:
    kind: str
    beta: float | None = None

    def __post_init__(self):
        if self.kind not in MODES:
            raise ValueError(f"unknown source mode {self.kind!r}; expected one of {MODES}")
        if self.kind == "grad_bounding":
            if self.beta is None or not self.beta > 0:
                raise ValueError("grad_bounding requires beta > 0")
        elif self.beta is not None:
            raise ValueError(f"beta is only meaningful for grad_bounding, not {self.kind}")

    def __str__(self):
        return self.kind if self.beta is None else f"{self.kind}(beta={self.beta:g})"


LINEAR = SourceMode("linear_transport")
PRESERVING = SourceMode("grad_preserving")


def bounding(beta: float) -> SourceMode:
    return SourceMode("grad_bounding", beta)


def sym(jac: np.ndarray) -> np.ndarray:
    return 0.5 * (jac + np.swapaxes(jac, -1, -2))


def _unit(p: np.ndarray, floor: float = P_FLOOR):
    norm = np.linalg.norm(p, axis=-1)
    if np.any(norm <= floor):
        raise DegenerateGradient(f"|p| = {float(np.min(norm)):.3g} is at or below {floor:g}")
    return p / norm[..., None], norm


def stretch_rate(jac: np.ndarray, phat: np.ndarray) -> np.ndarray:
    """<(grad v) phat, phat>; equals <D phat, phat> with D the symmetric part."""
    return np.einsum("...i,...ij,...j->...", phat, jac, phat)


def stretch_rate_gradient(hess: np.ndarray, phat: np.ndarray) -> np.ndarray:
    """x-gradient of <(grad v)(x) phat, phat> at fixed phat, from second derivatives."""
    return np.einsum("...i,...ijk,...j->...k", phat, hess, phat)


def hamiltonian(mode: SourceMode, field: VelocityField, t: float, x, p, phi) -> np.ndarray:
    x, p, phi = np.asarray(x, float), np.asarray(p, float), np.asarray(phi, float)
    vp = np.einsum("...i,...i->...", field.eval(t, x), p)
    if mode.kind == "linear_transport":
        return vp
    if mode.kind == "grad_preserving":
        phat, _ = _unit(p)
        return vp - phi * stretch_rate(field.jacobian(t, x), phat)
    return vp - phi * (mode.beta - np.linalg.norm(p, axis=-1))


def hamiltonian_dt(mode: SourceMode, field: VelocityField, t: float, x, p, phi) -> np.ndarray:
    """Explicit time derivative of H at fixed (x, p, phi)."""
    x, p, phi = np.asarray(x, float), np.asarray(p, float), np.asarray(phi, float)
    out = np.einsum("...i,...i->...", field.eval_dt(t, x), p)
    if mode.kind == "grad_preserving":
        phat, _ = _unit(p)
        out = out - phi * stretch_rate(field.jacobian_dt(t, x), phat)
    return out


def hamiltonian_dphi(mode: SourceMode, field: VelocityField, t: float, x, p) -> np.ndarray:
    """dH/dphi, i.e. minus the source factor R."""
    x, p = np.asarray(x, float), np.asarray(p, float)
    if mode.kind == "linear_transport":
        return np.zeros(p.shape[:-1])
    if mode.kind == "grad_preserving":
        phat, _ = _unit(p)
        return -stretch_rate(field.jacobian(t, x), phat)
    return -(mode.beta - np.linalg.norm(p, axis=-1))


def characteristic_rhs(mode: SourceMode, field: VelocityField, t: float, x, p, phi):
    """(x', p', phi') of the characteristic system x' = H_p, p' = -H_x - H_phi p, phi' = p.H_p - H."""
    x, p, phi = np.asarray(x, float), np.asarray(p, float), np.asarray(phi, float)
    v = field.eval(t, x)
    jac = field.jacobian(t, x)
    adv = -np.einsum("...ji,...j->...i", jac, p)  # -(grad v)^T p
    if mode.kind == "linear_transport":
        return v, adv, np.zeros_like(phi)
    if mode.kind == "grad_bounding":
        phat, pn = _unit(p, 0.0)
        dx = v + phi[..., None] * phat
        dp = adv + (mode.beta - pn)[..., None] * p
        return dx, dp, mode.beta * phi
    phat, pn = _unit(p)
    d = sym(jac)
    dphat = np.einsum("...ij,...j->...i", d, phat)
    q = np.einsum("...i,...i->...", dphat, phat)
    dx = v - (2.0 * phi / pn)[..., None] * (dphat - q[..., None] * phat)
    dtilde = stretch_rate_gradient(field.second_derivs(t, x), phat)
    dp = adv + q[..., None] * p + phi[..., None] * dtilde
    return dx, dp, phi * q
