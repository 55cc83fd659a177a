"""Measured constants: the strain bound alpha, V4 and the advisory step t*."""

from __future__ import annotations

import numpy as np

from ..domain_flow.domain import DomainSpec
from ..domain_flow.fields import VelocityField
from .hamiltonian import sym
from .integrate import CharacteristicBundle

SAFETY = 1.1


def estimate_alpha(
    field: VelocityField,
    domain: DomainSpec,
    t_max: float,
    samples: int,
    rng: np.random.Generator | None = None,
) -> float:
    """1.1 x max spectral radius of the symmetric strain D over sampled (t, x).

    |<(grad v) p, p>| <= alpha |p|^2 then holds at every sample.
    """
    if samples <= 0:
        raise ValueError("samples must be > 0")
    rng = rng if rng is not None else np.random.default_rng(0)
    x = domain.sample_interior(rng, samples)
    ts = rng.uniform(0.0, t_max, size=samples) if t_max > 0 else np.zeros(samples)
    # v = g(t) V(x), so the strain at (t, x) is g(t) times the spatial strain
    g = np.array([field.time_factor(float(t)) for t in ts])
    eig = np.linalg.eigvalsh(sym(field.spatial_jacobian(x)))
    radius = float(np.max(np.abs(g) * np.max(np.abs(eig), axis=1)))
    return SAFETY * radius


def _tstar_root() -> float:
    """Positive root of 6a^3 + 6a^2 + 3a - 1 = 0."""
    roots = np.roots([6.0, 6.0, 3.0, -1.0])
    real = roots[np.abs(roots.imag) < 1e-12].real
    return float(real[real > 0][0])


A_STAR = _tstar_root()


def estimate_tstar(v4: float) -> float:
    """min(1, 0.9 a* / (2 V4)); 1 when V4 = 0."""
    if v4 < 0:
        raise ValueError("V4 must be >= 0")
    if v4 == 0:
        return 1.0
    return min(1.0, 0.9 * A_STAR / (2.0 * v4))


def measure_v4(bundle: CharacteristicBundle) -> float:
    """max |d/ds dx/dxi| (entrywise) from consecutive stored Jacobians."""
    if bundle.jac is None:
        raise ValueError("bundle carries no variational states")
    dx = bundle.dx_dxi
    dt = np.diff(bundle.times)
    rate = np.abs(np.diff(dx, axis=0)) / dt[:, None, None, None]
    if bundle.frozen_time is not None:
        # frozen markers only count up to their freeze time
        valid = bundle.times[1:, None] < bundle.frozen_time[None, :]
        rate = np.where(valid[..., None, None], rate, 0.0)
    return float(np.max(rate)) if rate.size else 0.0
