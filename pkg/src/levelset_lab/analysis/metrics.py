"""Gradient diagnostics, grid-versus-tube comparison and convergence tables."""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.spatial import cKDTree

from ..characteristics.hamiltonian import LINEAR
from ..characteristics.integrate import CharacteristicBundle
from ..characteristics.tube import TubeSolution
from ..domain_flow.fields import VelocityField
from ..errors import BandEmpty
from ..eulerian.grid import GridField
from .interface import InterfaceSet, extract_interface, hausdorff

EXACT_TOL = 1e-10
M0_SHRINK = 0.5


@dataclass(frozen=True)
class DriftStats:
    """Measured d|p|/ds against -|p| <(grad v) nu, nu> along trajectories."""

    max_residual: float
    max_rate: float
    max_rel_drift: float


def gradient_drift_unmodified(field: VelocityField, bundle: CharacteristicBundle) -> DriftStats:
    """Check the gradient-drift identity of plain transport on stored markers.

    The bundle must come from linear_transport with a uniform time grid; the
    rate of |p| is taken by fourth-order central differences at interior
    samples.
    """
    times = np.asarray(bundle.times, float)
    if len(times) < 5:
        raise ValueError("need at least five stored times")
    dt = np.diff(times)
    if not np.allclose(dt, dt[0], rtol=1e-9, atol=1e-14):
        raise ValueError("stored times must be uniformly spaced")
    norms = np.linalg.norm(bundle.p, axis=-1)
    rate = (norms[:-4] - 8.0 * norms[1:-3] + 8.0 * norms[3:-1] - norms[4:]) / (12.0 * dt[0])
    predicted = np.empty_like(rate)
    for k in range(2, len(times) - 2):
        p = bundle.p[k]
        r = np.linalg.norm(p, axis=-1)
        nu = p / r[:, None]
        jac = field.jacobian(float(times[k]), bundle.x[k])
        predicted[k - 2] = -r * np.einsum("ni,nij,nj->n", nu, jac, nu)
    rel = np.abs(norms - norms[0]) / norms[0]
    return DriftStats(float(np.max(np.abs(rate - predicted))), float(np.max(np.abs(predicted))), float(np.max(rel)))


def drift_markers(field: VelocityField, xi, p0, T: float, step: float = 1e-3):
    """Linear-transport characteristics stored at every RK4 step up to T."""
    from ..characteristics.integrate import integrate_characteristics
    from ..domain_flow.ode import OdeOptions

    xi = np.asarray(xi, float)
    nsteps = int(round(T / step))
    out = step * np.arange(1, nsteps + 1)
    b = integrate_characteristics(
        LINEAR, field, xi, np.asarray(p0, float), np.zeros(len(xi)), 0.0, T, OdeOptions(step=step), output_times=out
    )
    return CharacteristicBundle(
        times=np.concatenate([[0.0], b.times]),
        x=np.concatenate([xi[None], b.x]),
        p=np.concatenate([np.asarray(p0, float)[None], b.p]),
        phi=np.concatenate([np.zeros((1, len(xi))), b.phi]),
        jac=None,
        energy=None,
        active=b.active,
        flow_logdet=None,
        frozen_time=b.frozen_time,
        frozen_phi=b.frozen_phi,
    )


@dataclass(frozen=True)
class ComparisonReport:
    """sup |phi_grid - phi_tube| over the band |phi_tube| <= m0, per time."""

    times: np.ndarray
    sup_error_in_band: np.ndarray
    band_node_counts: np.ndarray
    sign_mismatches: np.ndarray
    m0: np.ndarray
    h: float

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("time,m0,band_nodes,sup_error,sign_mismatches\n")
        for row in zip(self.times, self.m0, self.band_node_counts, self.sup_error_in_band, self.sign_mismatches):
            buf.write("%.17g,%.17g,%d,%.17g,%d\n" % row)
        return buf.getvalue()


def default_m0(tube: TubeSolution, t: float, m0: float | None = None) -> float:
    """Half the seeding band, shrunk below half the unfolded band at t."""
    base = 0.5 * tube.band_halfwidth if m0 is None else float(m0)
    if not base > 0:
        raise ValueError("m0 must be > 0")
    valid = tube.valid_halfwidth(t)
    while base > M0_SHRINK * valid:
        base *= M0_SHRINK
    return base


def _tube_values_on_grid(snap: GridField, tube: TubeSolution):
    """Grid node values and tube values at nodes within reach of live markers."""
    t = snap.t
    pts = snap.spec.nodes.reshape(-1, snap.spec.dimension)
    grid = snap.values.reshape(-1)
    mls = tube.reconstructor(t)
    dist, _ = cKDTree(mls.points).query(pts, distance_upper_bound=mls.radius)
    near = np.isfinite(dist)
    vals = np.full(len(pts), np.nan)
    if np.any(near):
        vals[near] = mls(pts[near])
    return grid, vals


def compare_in_tube(
    grid_run: Sequence[GridField],
    tube: TubeSolution,
    m0: float | None = None,
    times: Sequence[float] | None = None,
) -> ComparisonReport:
    """sup |phi_grid - phi_tube| over nodes with |phi_tube| <= m0.

    m0 defaults to half the seeding band and is shrunk per time so the band
    only holds unfolded characteristics. Sign mismatches count band nodes
    where both values are nonzero and disagree in sign.
    """
    snaps = {round(s.t, 12): s for s in grid_run}
    wanted = [s.t for s in grid_run] if times is None else list(times)
    out_t, sups, counts, mism, m0s = [], [], [], [], []
    h = grid_run[0].spec.h if grid_run else float("nan")
    for t in wanted:
        snap = snaps.get(round(float(t), 12))
        if snap is None:
            raise ValueError(f"no grid snapshot at t={t}")
        level = default_m0(tube, snap.t, m0)
        grid, vals = _tube_values_on_grid(snap, tube)
        band = np.isfinite(vals) & (np.abs(vals) <= level)
        if not np.any(band):
            raise BandEmpty(f"no grid node in the band |phi| <= {level:.3g} at t={snap.t:.6g}")
        err = np.abs(grid[band] - vals[band])
        gs, ts = np.sign(grid[band]), np.sign(vals[band])
        out_t.append(snap.t)
        sups.append(float(np.max(err)))
        counts.append(int(np.sum(band)))
        mism.append(int(np.sum((gs * ts) < 0)))
        m0s.append(level)
    return ComparisonReport(np.array(out_t), np.array(sups), np.array(counts), np.array(mism), np.array(m0s), h)


@dataclass(frozen=True)
class ConvergenceRow:
    n: int
    h: float
    interface_error: float
    tube_error: float | None
    order: float | str | None


def _order(prev: ConvergenceRow | None, n: int, err: float):
    if prev is None:
        return None
    if err <= EXACT_TOL and prev.interface_error <= EXACT_TOL:
        return "exact"
    if err <= 0 or prev.interface_error <= 0:
        return None
    return math.log(prev.interface_error / err) / math.log(n / prev.n)


def convergence_study(
    run_grid: Callable[[int], GridField],
    reference: InterfaceSet,
    n_list: Sequence[int],
    tube_error: Callable[[int, GridField], float] | None = None,
) -> list[ConvergenceRow]:
    """Interface error against a reference per n, with observed orders.

    ``run_grid(n)`` returns the final snapshot at resolution n. The order
    column holds log(e_prev / e) / log(n / n_prev), "exact" when both errors
    sit at round-off, and None on the first row.
    """
    ns = [int(n) for n in n_list]
    if any(b <= a for a, b in zip(ns, ns[1:])):
        raise ValueError("n_list must be strictly ascending")
    rows: list[ConvergenceRow] = []
    for n in ns:
        snap = run_grid(n)
        err = hausdorff(extract_interface(snap), reference)
        terr = tube_error(n, snap) if tube_error is not None else None
        rows.append(ConvergenceRow(n, snap.spec.h, err, terr, _order(rows[-1] if rows else None, n, err)))
    return rows


def format_table(rows: Sequence[ConvergenceRow]) -> str:
    """Aligned plain-text convergence table."""
    head = f"{'n':>6} {'h':>12} {'interface_err':>14} {'tube_err':>12} {'order':>8}"
    lines = [head]
    for r in rows:
        tube = "" if r.tube_error is None else f"{r.tube_error:.4e}"
        order = "" if r.order is None else (r.order if isinstance(r.order, str) else f"{r.order:.3f}")
        lines.append(f"{r.n:>6} {r.h:>12.5e} {r.interface_error:>14.4e} {tube:>12} {order:>8}")
    return "\n".join(lines) + "\n"


def convergence_csv(rows: Sequence[ConvergenceRow]) -> str:
    buf = io.StringIO()
    buf.write("n,h,interface_error,tube_error,order\n")
    for r in rows:
        tube = "" if r.tube_error is None else "%.17g" % r.tube_error
        order = "" if r.order is None else (r.order if isinstance(r.order, str) else "%.17g" % r.order)
        buf.write("%d,%.17g,%.17g,%s,%s\n" % (r.n, r.h, r.interface_error, tube, order))
    return buf.getvalue()
