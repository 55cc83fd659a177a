"""Monotone local Lax-Friedrichs scheme for phi_t + v.grad phi = phi R.

The discrete Hamiltonian is
    H^(p-, p+, u) = G((p- + p+)/2, u) - sum_i sigma_i (p+_i - p-_i) / 2
with G(p, u) = v.p - u R(p) and sigma_i = |v_i| + |u| L_R, where L_R
bounds |dR/dp_i| locally. That choice makes H^ nonincreasing in every
p+ component and nondecreasing in every p- component.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field as dc_field
from typing import Callable, Sequence

import numpy as np

from ..characteristics.hamiltonian import SourceMode, sym
from ..domain_flow.fields import VelocityField
from ..domain_flow.flow import reference_levelset
from ..domain_flow.ode import OdeOptions
from ..errors import NonFiniteState, SanityBoundViolated
from .cutoffs import CutoffConfig, lipschitz_in_p, source_from_strain, spectral_norm_sym
from .grid import GridField, GridSpec
from .kernels import MODE_CODES, flux_2d, flux_3d, max_sigma as _max_sigma_kernel, packed_strain

INTEGRATORS = ("euler", "rk2_tvd")
SIGMA_FLOOR = 1e-8
STATIONARY_BOUNDARY = 1e-13
SANITY_SLACK = 1e-3
TIME_SAMPLES = 33


@dataclass(frozen=True)
class SchemeConfig:
    cfl: float = 0.4
    time_integrator: str = "rk2_tvd"
    v0_bound: float = 0.0

    def __post_init__(self):
        if not 0 < self.cfl <= 0.9:
            raise ValueError("cfl must lie in (0, 0.9]")
        if self.time_integrator not in INTEGRATORS:
            raise ValueError(f"time_integrator must be one of {INTEGRATORS}")
        if self.v0_bound < 0:
            raise ValueError("v0_bound must be >= 0")


def lf_flux(mode: SourceMode, cut: CutoffConfig, v, strain, strain_norm, eta1, p_minus, p_plus, u):
    """(H^, sigma) from node data; every argument is batched over leading axes."""
    pbar = 0.5 * (p_minus + p_plus)
    R = source_from_strain(mode, cut, strain, eta1, pbar)
    G = np.sum(v * pbar, axis=-1) - u * R
    L = lipschitz_in_p(mode, cut, strain_norm, eta1)
    sigma = np.abs(v) + (np.abs(u) * L)[..., None]
    return G - 0.5 * np.sum(sigma * (p_plus - p_minus), axis=-1), sigma


def numerical_hamiltonian(field: VelocityField, cut: CutoffConfig, mode: SourceMode, t: float, x, p_minus, p_plus, u):
    x = np.asarray(x, float)
    strain = sym(field.jacobian(t, x))
    H, _ = lf_flux(
        mode,
        cut,
        field.eval(t, x),
        strain,
        spectral_norm_sym(strain),
        cut.eta1(t, x),
        np.asarray(p_minus, float),
        np.asarray(p_plus, float),
        np.asarray(u, float),
    )
    return H


def boundary_value(field: VelocityField, phi0, t: float, x_boundary, opts: OdeOptions = OdeOptions()):
    """Dirichlet datum phi0(X(0, t, x)) on the boundary."""
    return reference_levelset(field, phi0, t, x_boundary, opts)


class BoundaryData:
    """Boundary-node values, cached per time.

    When v vanishes at every boundary node the nodes never move, so the
    datum is phi0 itself and no flow map is integrated.
    """

    def __init__(self, field: VelocityField, phi0, spec: GridSpec, opts: OdeOptions = OdeOptions()):
        self.field = field
        self.phi0 = phi0
        self.opts = opts
        self.mask = spec.boundary_mask
        self.points = spec.nodes[self.mask]
        self.stationary = bool(np.max(np.abs(field.spatial(self.points)), initial=0.0) <= STATIONARY_BOUNDARY)
        self._initial = np.asarray(phi0(self.points), float)
        self._cache: dict[float, np.ndarray] = {}

    def values(self, t: float) -> np.ndarray:
        if self.stationary or t == 0:
            return self._initial
        key = float(t)
        if key not in self._cache:
            self._cache[key] = np.asarray(boundary_value(self.field, self.phi0, key, self.points, self.opts), float)
        return self._cache[key]

    def apply(self, t: float, values: np.ndarray) -> np.ndarray:
        values[self.mask] = self.values(t)
        return values


class GridOperator:
    """Precomputed node data for one (grid, field, cut-offs, mode) combination."""

    def __init__(self, spec: GridSpec, field: VelocityField, cut: CutoffConfig, mode: SourceMode, compiled: bool = True):
        self.spec = spec
        self.compiled = compiled
        self.field = field
        self.cut = cut
        self.mode = mode
        inner = spec.nodes[spec.interior]
        self._x = inner
        self._V = field.spatial(inner)
        self._strain = sym(field.spatial_jacobian(inner)) if mode.kind == "grad_preserving" else None
        self._snorm = spectral_norm_sym(self._strain) if self._strain is not None else None
        self._dist = cut.domain.boundary_distance(inner)
        self._eta1_const = cut.eta1_from_distance(0.0, self._dist) if cut.eps_is_constant else None
        self.max_speed = np.max(np.abs(self._V), axis=tuple(range(spec.dimension))) if inner.size else np.zeros(spec.dimension)
        shape = inner.shape[:-1]
        d = spec.dimension
        self._k_V = np.ascontiguousarray(self._V)
        if self._strain is not None:
            self._k_S = packed_strain(self._strain)
            self._k_snorm = np.ascontiguousarray(self._snorm)
        else:
            self._k_S = np.zeros(shape + (d * (d + 1) // 2,))
            self._k_snorm = np.zeros(shape)
        if mode.kind == "grad_bounding":
            self._k_knots = cut.eta3_knots
            self._k_lip_bound = cut.bounding_lipschitz_factor
        else:
            self._k_knots = (0.0, 1.0)
            self._k_lip_bound = 0.0
        self._k_lip_pres = cut.preserving_lipschitz_factor if mode.kind == "grad_preserving" else 0.0

    def _eta1(self, t: float):
        return self._eta1_const if self._eta1_const is not None else self.cut.eta1_from_distance(t, self._dist)

    def differences(self, u: np.ndarray):
        d = self.spec.dimension
        h = self.spec.h
        core = u[self.spec.interior]
        pm = np.empty(core.shape + (d,))
        pp = np.empty(core.shape + (d,))
        for axis in range(d):
            lo = [slice(1, -1)] * d
            hi = [slice(1, -1)] * d
            lo[axis] = slice(0, -2)
            hi[axis] = slice(2, None)
            pm[..., axis] = (core - u[tuple(lo)]) / h
            pp[..., axis] = (u[tuple(hi)] - core) / h
        return core, pm, pp

    def flux(self, t: float, u: np.ndarray):
        """(H^ on interior nodes, max sigma)."""
        g = self.field.time_factor(t)
        if self.compiled and self.spec.dimension in (2, 3):
            return self._flux_compiled(t, g, u)
        core, pm, pp = self.differences(u)
        strain = None if self._strain is None else g * self._strain
        snorm = None if self._snorm is None else abs(g) * self._snorm
        H, sigma = lf_flux(self.mode, self.cut, g * self._V, strain, snorm, self._eta1(t), pm, pp, core)
        return H, float(np.max(sigma)) if sigma.size else 0.0

    def _flux_compiled(self, t: float, g: float, u: np.ndarray):
        kernel = flux_2d if self.spec.dimension == 2 else flux_3d
        out = np.empty(tuple(n - 2 for n in u.shape))
        eta1 = np.ascontiguousarray(np.broadcast_to(self._eta1(t), out.shape), dtype=float)
        beta = self.mode.beta if self.mode.beta is not None else 0.0
        smax = kernel(
            np.ascontiguousarray(u, dtype=float),
            self.spec.h,
            float(g),
            self._k_V,
            self._k_S,
            self._k_snorm,
            eta1,
            MODE_CODES[self.mode.kind],
            float(beta),
            float(self._k_knots[0]),
            float(self._k_knots[1]),
            float(self._k_lip_pres),
            float(self._k_lip_bound),
            out,
        )
        return out, float(smax)

    def max_sigma(self, t: float, u: np.ndarray, g: float | None = None) -> float:
        """max sigma at t; ``g`` replaces |time factor| when given."""
        g = abs(self.field.time_factor(t)) if g is None else g
        core = u[self.spec.interior]
        if not core.size:
            return 0.0
        if self._eta1_const is not None:
            if not hasattr(self, "_speed_flat"):
                self._speed_flat = np.ascontiguousarray(np.max(np.abs(self._V), axis=-1).ravel())
                unit = None if self._snorm is None else self._snorm
                self._lip_flat = np.ascontiguousarray(
                    np.broadcast_to(lipschitz_in_p(self.mode, self.cut, unit, self._eta1_const), core.shape).ravel(), dtype=float
                )
            g_lip = g if self.mode.kind == "grad_preserving" else 1.0
            return float(_max_sigma_kernel(np.ascontiguousarray(core).ravel(), self._speed_flat, self._lip_flat, g, g_lip))
        speed = g * np.max(np.abs(self._V), axis=-1)
        L = lipschitz_in_p(self.mode, self.cut, None if self._snorm is None else g * self._snorm, self._eta1(t))
        return float(np.max(speed + np.abs(core) * L))


def time_factor_sup(field: VelocityField, t0: float, t1: float, samples: int = TIME_SAMPLES) -> float:
    """max |time factor| sampled on [t0, t1]."""
    if field.is_steady:
        return abs(field.time_factor(t0))
    return max(abs(field.time_factor(float(s))) for s in np.linspace(t0, t1, samples))


def cfl_dt(
    grid: GridSpec,
    field: VelocityField,
    scheme: SchemeConfig,
    t: float,
    u: np.ndarray | None = None,
    cut: CutoffConfig | None = None,
    mode: SourceMode | None = None,
    operator: GridOperator | None = None,
    horizon: float | None = None,
) -> float:
    """cfl h / (d max sigma); with no state given, sigma is |v| alone.

    For unsteady fields the time factor is bounded over the step the
    instantaneous value would allow (clipped at ``horizon``), so a momentarily
    slow field (a reversal instant) cannot license a step across its fast phase.
    """
    if operator is None and u is not None and cut is not None and mode is not None:
        operator = GridOperator(grid, field, cut, mode)
    if operator is not None and u is not None:
        sigma = lambda g: operator.max_sigma(t, u, g)
    else:
        inner = grid.nodes[grid.interior]
        speed = float(np.max(np.abs(field.spatial(inner)))) if inner.size else 0.0
        sigma = lambda g: g * speed
    scale = scheme.cfl * grid.h / grid.dimension
    g_now = abs(field.time_factor(t))
    dt = scale / max(sigma(g_now), SIGMA_FLOOR)
    if not field.is_steady:
        end = t + dt if horizon is None else min(t + dt, max(horizon, t))
        dt = min(dt, scale / max(sigma(max(g_now, time_factor_sup(field, t, end))), SIGMA_FLOOR))
    return dt


@dataclass
class DiagnosticsSeries:
    rows: list[dict] = dc_field(default_factory=list)

    def record(self, **row) -> None:
        self.rows.append(row)

    def column(self, name: str) -> np.ndarray:
        return np.array([r[name] for r in self.rows])

    def to_csv(self) -> str:
        if not self.rows:
            return ""
        keys = list(self.rows[0])
        for r in self.rows[1:]:
            keys.extend(k for k in r if k not in keys)
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
        writer.writeheader()
        for r in self.rows:
            writer.writerow({k: ("%.17g" % v if isinstance(v, float) else v) for k, v in r.items()})
        return buf.getvalue()


def _advance(op: GridOperator, boundary: BoundaryData, t: float, u: np.ndarray, dt: float) -> np.ndarray:
    H, _ = op.flux(t, u)
    out = u.copy()
    out[op.spec.interior] = u[op.spec.interior] - dt * H
    return boundary.apply(t + dt, out)


def step(
    state: GridField,
    field: VelocityField,
    cut: CutoffConfig,
    mode: SourceMode,
    scheme: SchemeConfig,
    boundary: BoundaryData | None = None,
    dt: float | None = None,
    operator: GridOperator | None = None,
) -> GridField:
    """One explicit step; boundary nodes take the transported datum."""
    op = operator or GridOperator(state.spec, field, cut, mode)
    if boundary is None:
        raise ValueError("step needs boundary data (BoundaryData)")
    if dt is None:
        dt = cfl_dt(state.spec, field, scheme, state.t, state.values, operator=op)
    u = state.values
    t = state.t
    if scheme.time_integrator == "euler":
        new = _advance(op, boundary, t, u, dt)
    else:
        u1 = _advance(op, boundary, t, u, dt)
        u2 = _advance(op, boundary, t + dt, u1, dt)
        new = 0.5 * (u + u2)
        boundary.apply(t + dt, new)
    if not np.all(np.isfinite(new)):
        raise NonFiniteState(f"non-finite grid values after step at t={t + dt:.6g}")
    return GridField(t + dt, new, state.spec)


def run_to_time(
    state0: GridField,
    T: float,
    field: VelocityField,
    cut: CutoffConfig,
    mode: SourceMode,
    scheme: SchemeConfig,
    output_times: Sequence[float],
    boundary: BoundaryData,
    on_step: Callable[[GridField, float], None] | None = None,
) -> tuple[list[GridField], DiagnosticsSeries]:
    """March from state0.t to T, emitting snapshots exactly at output_times.

    Enforces max|phi| <= max|phi0| e^{V0 T} (1 + 1e-3).
    """
    if not T > 0:
        raise ValueError("T must be > 0")
    outs = sorted(float(s) for s in output_times)
    if any(s < state0.t - 1e-12 or s > T + 1e-12 for s in outs):
        raise ValueError("output times must lie in [t0, T]")
    op = GridOperator(state0.spec, field, cut, mode)
    bound = float(np.max(np.abs(state0.values))) * np.exp(scheme.v0_bound * T) * (1.0 + SANITY_SLACK)
    diag = DiagnosticsSeries()
    snaps: list[GridField] = []
    state = state0
    steps = 0
    targets = outs if outs and outs[-1] >= T - 1e-12 else outs + [float(T)]
    for target in targets:
        while state.t < target - 1e-12:
            dt = cfl_dt(state.spec, field, scheme, state.t, state.values, operator=op, horizon=target)
            # stretch or shorten the last step(s) so the target is hit exactly
            remaining = target - state.t
            if dt >= remaining:
                dt = remaining
            elif remaining < 2 * dt:
                dt = 0.5 * remaining
            state = step(state, field, cut, mode, scheme, boundary, dt=dt, operator=op)
            if remaining == dt:
                state = GridField(target, state.values, state.spec)
            steps += 1
            peak = float(np.max(np.abs(state.values)))
            if peak > bound:
                raise SanityBoundViolated(f"max|phi| = {peak:.6g} exceeds growth bound {bound:.6g} at t={state.t:.6g}")
            if on_step is not None:
                on_step(state, dt)
        if any(abs(target - s) <= 1e-12 for s in outs):
            snaps.append(state)
            diag.record(
                t=float(target),
                steps=steps,
                max_abs_phi=float(np.max(np.abs(state.values))),
                growth_bound=bound,
            )
    return snaps, diag
