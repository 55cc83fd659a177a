"""Kinematic flow map, the transported reference level set, and the
boundary flow-invariance check."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from ..errors import DomainEscape, NotOnBoundary
from .domain import DomainSpec
from .fields import VelocityField
from .ode import OdeOptions, integrate

ESCAPE_TOL = 1e-9
BOUNDARY_TOL = 1e-9


def domain_guard(domain: DomainSpec, tol: float = ESCAPE_TOL):
    """Post-step hook: clamp tiny overshoots, raise on real escapes.

    Works on states whose first ``d`` trailing components are positions.
    """
    d = domain.dimension

    def guard(t: float, y: np.ndarray) -> np.ndarray:
        x = y[..., :d]
        out = domain.outside_distance(x)
        worst = float(np.max(out)) if out.size else 0.0
        if worst > tol:
            raise DomainEscape(f"trajectory left the domain by {worst:.3g} at t={t:.6g}")
        if worst > 0.0:
            y = y.copy()
            y[..., :d] = domain.clamp(x)
        return y

    return guard


def eval_flow_map(
    field: VelocityField,
    t_target: float,
    t_source: float,
    xi,
    opts: OdeOptions = OdeOptions(),
    output_times: Sequence[float] | None = None,
):
    """X(t_target, t_source, xi) for a point or an (N, d) array of points.

    With ``output_times`` the positions at each of those times are returned
    as a list instead.
    """
    if t_target < 0 or t_source < 0:
        raise ValueError("flow-map times must be >= 0")
    xi = np.asarray(xi, float)
    domain = field.domain
    if np.any(domain.outside_distance(xi) > ESCAPE_TOL):
        raise DomainEscape("seed point outside the closed domain")
    xi = domain.clamp(xi)

    def rhs(t, x):
        return field.eval(t, x)

    times, states = integrate(
        rhs, xi, t_source, t_target, opts, output_times=output_times, post_step=domain_guard(domain)
    )
    if output_times is None:
        return states[-1]
    return states


def reference_levelset(
    field: VelocityField,
    phi0: Callable[[np.ndarray], np.ndarray],
    t: float,
    x,
    opts: OdeOptions = OdeOptions(),
):
    """phi0 pulled back along the flow: phi0(X(0, t, x))."""
    x = np.asarray(x, float)
    if t == 0:
        return phi0(x)
    return phi0(eval_flow_map(field, 0.0, t, x, opts))


@dataclass(frozen=True)
class SubtangentialReport:
    h_values: np.ndarray
    ratios_plus: np.ndarray
    ratios_minus: np.ndarray
    threshold: float
    verdict: bool

    @property
    def ratios(self) -> np.ndarray:
        return np.vstack([self.ratios_plus, self.ratios_minus])


DEFAULT_H = 2.0 ** -np.arange(4, 27)


def check_subtangential(
    field: VelocityField,
    domain: DomainSpec,
    t: float,
    x,
    h_values: Sequence[float] | None = None,
    rel_threshold: float = 1e-4,
    tail: int = 3,
) -> SubtangentialReport:
    """Estimate liminf dist(x + h z, boundary)/h for z = +v and z = -v.

    ``x`` is first projected onto the boundary so that its own offset
    (allowed up to 1e-9) does not pollute the small-h ratios.
    """
    x = np.asarray(x, float)
    if float(domain.boundary_distance(x)) > BOUNDARY_TOL:
        raise NotOnBoundary(f"point {x} is {float(domain.boundary_distance(x)):.3g} away from the boundary")
    x = _project_to_boundary(domain, x)
    h = np.asarray(DEFAULT_H if h_values is None else h_values, float)
    if h.ndim != 1 or len(h) == 0 or np.any(h <= 0) or np.any(np.diff(h) >= 0):
        raise ValueError("h_values must be a strictly decreasing positive sequence")
    z = field.eval(t, x)
    znorm = float(np.linalg.norm(z))
    plus = domain.boundary_distance(x[None, :] + h[:, None] * z[None, :]) / h
    minus = domain.boundary_distance(x[None, :] - h[:, None] * z[None, :]) / h
    threshold = rel_threshold * znorm
    k = min(tail, len(h))
    if znorm <= 1e-12:
        verdict = True
    else:
        verdict = bool(plus[-k:].min() <= threshold and minus[-k:].min() <= threshold)
    return SubtangentialReport(h, plus, minus, threshold, verdict)


def _project_to_boundary(domain: DomainSpec, x: np.ndarray) -> np.ndarray:
    if domain.boundary_kind == "ball":
        c = np.asarray(domain.center)
        y = x - c
        return c + domain.radius * y / np.linalg.norm(y)
    lo, hi = domain.bounding_box
    x = np.clip(x, lo, hi)
    gaps = np.concatenate([x - lo, hi - x])
    k = int(np.argmin(gaps))
    x = x.copy()
    d = domain.dimension
    x[k % d] = lo[k] if k < d else hi[k - d]
    return x
