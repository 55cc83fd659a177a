"""Marker-cloud tube solutions around the moving interface."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field as dc_field
from typing import Sequence

import numpy as np

from ..contour import edge_crossings, marching_squares, zero_nodes
from ..domain_flow.domain import DomainSpec
from ..domain_flow.fields import VelocityField
from ..domain_flow.ode import OdeOptions
from ..errors import DegenerateGradient
from .hamiltonian import SourceMode
from .integrate import CharacteristicBundle, integrate_characteristics
from .mls import MlsReconstructor

INTERFACE_TOL = 1e-12
NEWTON_MAX_ITER = 60
GRAD_MIN = 1e-8


@dataclass
class MarkerSeeds:
    xi: np.ndarray
    on_interface: np.ndarray
    segments: np.ndarray  # (M, 2) ids into xi; 2D interface polyline, empty in 3D
    spacing: float
    interface_spacing: float


def project_to_zero(phi0, grad_phi0, x: np.ndarray, tol: float = INTERFACE_TOL) -> np.ndarray:
    """Newton steps x <- x - phi grad/|grad|^2 until |phi| <= tol."""
    x = np.array(x, float, copy=True)
    for _ in range(NEWTON_MAX_ITER):
        val = phi0(x)
        todo = np.abs(val) > tol
        if not np.any(todo):
            return x
        g = grad_phi0(x[todo])
        g2 = np.sum(g**2, axis=1)
        if np.any(g2 < GRAD_MIN**2):
            raise DegenerateGradient("vanishing gradient during interface projection")
        x[todo] -= (val[todo] / g2)[:, None] * g
    val = phi0(x)
    if np.max(np.abs(val)) > tol:
        raise DegenerateGradient(f"interface projection stalled at |phi| = {np.max(np.abs(val)):.3g}")
    return x


def _lattice(domain: DomainSpec, spacing: float) -> tuple[np.ndarray, tuple[int, ...], np.ndarray]:
    lo, hi = domain.bounding_box
    counts = tuple(int(np.floor((b - a) / spacing + 1e-9)) + 1 for a, b in zip(lo, hi))
    axes = [a + spacing * np.arange(c) for a, c in zip(lo, counts)]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    return pts, counts, lo


def seed_tube(
    phi0,
    grad_phi0,
    domain: DomainSpec,
    band_halfwidth: float,
    spacing: float,
    interface_spacing: float | None = None,
) -> MarkerSeeds:
    """Lattice markers in {|phi0| <= band} plus interface markers on {phi0 = 0}.

    The lattice is aligned with the domain's lower corner, so with a matching
    spacing band markers coincide with grid nodes. Interface markers come
    from contouring phi0 on a finer lattice, then Newton-projecting onto the
    zero set; in 2D they keep the contour's segment connectivity.
    """
    if not band_halfwidth > 0 or not spacing > 0:
        raise ValueError("band_halfwidth and spacing must be > 0")
    h_if = interface_spacing if interface_spacing is not None else spacing / 2
    pts, counts, lo = _lattice(domain, spacing)
    flat = pts.reshape(-1, domain.dimension)
    vals = phi0(flat)
    keep = (np.abs(vals) <= band_halfwidth) & domain.contains(flat)
    band = flat[keep]

    fine, _, flo = _lattice(domain, h_if)
    fvals = phi0(fine.reshape(-1, domain.dimension)).reshape(fine.shape[:-1])
    if domain.dimension == 2:
        ipts, segs = marching_squares(fvals, flo, h_if)
    else:
        ipts, _ = edge_crossings(fvals, flo, h_if)
        ipts = np.vstack([ipts, zero_nodes(fvals, flo, h_if)])
        segs = np.zeros((0, 2), np.int64)
    ipts, segs = _merge_duplicates(ipts, segs, 1e-9 * h_if)
    if len(ipts):
        ipts = project_to_zero(phi0, grad_phi0, ipts)
        ipts = domain.clamp(ipts)

    xi = np.vstack([ipts, band]) if len(ipts) else band
    gn = np.linalg.norm(grad_phi0(xi), axis=1) if len(xi) else np.zeros(0)
    if np.any(gn < GRAD_MIN):
        raise DegenerateGradient(f"|grad phi0| = {gn.min():.3g} at a seed")
    on_if = np.zeros(len(xi), bool)
    on_if[: len(ipts)] = True
    return MarkerSeeds(xi, on_if, segs, float(spacing), float(h_if))


def _merge_duplicates(pts: np.ndarray, segs: np.ndarray, tol: float):
    """Collapse crossing points that coincide (zero-valued lattice nodes)."""
    if len(pts) == 0:
        return pts, segs
    key = np.round(pts / max(tol, 1e-300)).astype(np.int64)
    _, first, inverse = np.unique(key, axis=0, return_index=True, return_inverse=True)
    inverse = inverse.reshape(-1)
    order = np.argsort(first)
    remap = np.empty_like(order)
    remap[order] = np.arange(len(order))
    new_pts = pts[first[order]]
    new_segs = remap[inverse[segs]] if len(segs) else segs
    if len(new_segs):
        new_segs = new_segs[new_segs[:, 0] != new_segs[:, 1]]
    return new_pts, new_segs


@dataclass
class TubeSolution:
    """Marker trajectories sampled on a shared time grid."""

    mode: SourceMode
    field: VelocityField
    band_halfwidth: float
    time_grid: np.ndarray
    xi0: np.ndarray
    on_interface: np.ndarray
    segments: np.ndarray
    bundle: CharacteristicBundle
    spacing: float
    _mls: dict = dc_field(default_factory=dict, repr=False)

    @property
    def dimension(self) -> int:
        return self.xi0.shape[1]

    @property
    def marker_count(self) -> int:
        return len(self.xi0)

    def time_index(self, t: float) -> int:
        k = int(np.argmin(np.abs(self.time_grid - t)))
        if abs(self.time_grid[k] - t) > 1e-9:
            raise ValueError(f"t={t} is not a stored tube time")
        return k

    def active_at(self, t: float) -> np.ndarray:
        k = self.time_index(t)
        return self.bundle.frozen_time > self.time_grid[k]

    def valid_halfwidth(self, t: float) -> float:
        """Smallest |phi| carried by a marker frozen at or before t (inf if none).

        Level bands |phi| below this contain only unfolded characteristics.
        """
        k = self.time_index(t)
        frozen = self.bundle.frozen_time <= self.time_grid[k]
        if not np.any(frozen):
            return np.inf
        return float(np.min(np.abs(self.bundle.frozen_phi[frozen])))

    def reconstructor(self, t: float) -> MlsReconstructor:
        k = self.time_index(t)
        if k not in self._mls:
            act = self.active_at(self.time_grid[k])
            self._mls[k] = MlsReconstructor(self.bundle.x[k, act], self.bundle.phi[k, act])
        return self._mls[k]

    def evaluate(self, t: float, x) -> np.ndarray:
        """MLS value of the characteristic solution; NaN marks OutOfTube."""
        return self.reconstructor(t)(x)

    def interface_points(self, t: float) -> np.ndarray:
        k = self.time_index(t)
        return self.bundle.x[k, self.on_interface]

    def interface_segments(self) -> np.ndarray:
        """Segment ids re-indexed into the interface-marker subset."""
        ids = np.flatnonzero(self.on_interface)
        remap = np.full(self.marker_count, -1)
        remap[ids] = np.arange(len(ids))
        return remap[self.segments] if len(self.segments) else self.segments

    def det_dx_dxi(self) -> np.ndarray:
        det = self.bundle.det_dx_dxi()
        return det if det is not None else np.full(self.bundle.phi.shape, np.nan)

    def write_csv(self, stream) -> None:
        d = self.dimension
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(
            ["time", "marker_id", "on_interface"]
            + [f"x{i}" for i in range(d)]
            + [f"p{i}" for i in range(d)]
            + ["phi", "det_dx_dxi"]
        )
        det = self.det_dx_dxi()
        fmt = "%.17g"
        for k, t in enumerate(self.time_grid):
            act = self.bundle.frozen_time > t
            for i in np.flatnonzero(act):
                writer.writerow(
                    [fmt % t, i, int(self.on_interface[i])]
                    + [fmt % v for v in self.bundle.x[k, i]]
                    + [fmt % v for v in self.bundle.p[k, i]]
                    + [fmt % self.bundle.phi[k, i], fmt % det[k, i]]
                )

    def to_csv(self) -> str:
        buf = io.StringIO()
        self.write_csv(buf)
        return buf.getvalue()


def build_tube(
    mode: SourceMode,
    field: VelocityField,
    shape,
    band_halfwidth: float,
    spacing: float,
    T: float,
    output_times: Sequence[float] = (),
    opts: OdeOptions = OdeOptions(),
    interface_spacing: float | None = None,
    fold_threshold: float = 0.1,
    max_segment: float | None = None,
    max_refinements: int = 8,
) -> TubeSolution:
    """Seed a tube around {shape = 0} and integrate every marker to T.

    ``shape`` supplies value/grad/hess of the initial level-set function.
    Band markers whose fold ratio drops to ``fold_threshold`` are frozen and
    dropped from reconstruction; interface markers must stay valid. In 2D,
    interface segments longer than ``max_segment`` at any stored time get a
    new marker seeded at the projected midpoint of their endpoints.
    """
    seeds = seed_tube(shape.value, shape.grad, field.domain, band_halfwidth, spacing, interface_spacing)
    times = np.unique(np.concatenate([[0.0], np.asarray(output_times, float), [T]]))
    times = times[(times >= 0) & (times <= T + 1e-12)]
    if max_segment is None:
        max_segment = 3.0 * seeds.interface_spacing

    def run(xi, on_if):
        out_t = times[1:]
        b = integrate_characteristics(
            mode,
            field,
            xi,
            shape.grad(xi),
            shape.value(xi),
            0.0,
            float(T),
            opts,
            with_variational=True,
            hess0=shape.hess(xi),
            output_times=out_t,
            freeze=~on_if,
            fold_threshold=fold_threshold,
        )
        return _prepend_initial(b, xi, shape)

    xi, on_if, segs = seeds.xi, seeds.on_interface, seeds.segments
    bundle = run(xi, on_if)
    for _ in range(max_refinements):
        if field.dimension != 2 or len(segs) == 0:
            break
        seg_len = np.linalg.norm(bundle.x[:, segs[:, 0]] - bundle.x[:, segs[:, 1]], axis=-1).max(axis=0)
        long = seg_len > max_segment
        if not np.any(long):
            break
        mids = 0.5 * (xi[segs[long, 0]] + xi[segs[long, 1]])
        mids = field.domain.clamp(project_to_zero(shape.value, shape.grad, mids))
        new_ids = len(xi) + np.arange(len(mids))
        extra = run(mids, np.ones(len(mids), bool))
        bundle = _concat(bundle, extra)
        xi = np.vstack([xi, mids])
        on_if = np.concatenate([on_if, np.ones(len(mids), bool)])
        split = segs[long]
        segs = np.vstack([segs[~long], np.c_[split[:, 0], new_ids], np.c_[new_ids, split[:, 1]]])
    return TubeSolution(mode, field, band_halfwidth, times, xi, on_if, segs, bundle, seeds.spacing)


def _prepend_initial(b: CharacteristicBundle, xi: np.ndarray, shape) -> CharacteristicBundle:
    from .integrate import initial_jacobian

    n, d = xi.shape
    p0 = shape.grad(xi)
    jac0 = initial_jacobian(p0, shape.hess(xi))
    return CharacteristicBundle(
        times=np.concatenate([[0.0], b.times]),
        x=np.concatenate([xi[None], b.x]),
        p=np.concatenate([p0[None], b.p]),
        phi=np.concatenate([shape.value(xi)[None], b.phi]),
        jac=np.concatenate([jac0[None], b.jac]),
        energy=None,
        active=b.active,
        flow_logdet=np.concatenate([np.zeros((1, n)), b.flow_logdet]),
        frozen_time=b.frozen_time,
        frozen_phi=b.frozen_phi,
    )


def _concat(a: CharacteristicBundle, b: CharacteristicBundle) -> CharacteristicBundle:
    return CharacteristicBundle(
        times=a.times,
        x=np.concatenate([a.x, b.x], axis=1),
        p=np.concatenate([a.p, b.p], axis=1),
        phi=np.concatenate([a.phi, b.phi], axis=1),
        jac=np.concatenate([a.jac, b.jac], axis=1),
        energy=None,
        active=np.concatenate([a.active, b.active]),
        flow_logdet=np.concatenate([a.flow_logdet, b.flow_logdet], axis=1),
        frozen_time=np.concatenate([a.frozen_time, b.frozen_time]),
        frozen_phi=np.concatenate([a.frozen_phi, b.frozen_phi]),
    )


def evaluate_tube(tube: TubeSolution, t: float, x) -> np.ndarray:
    return tube.evaluate(t, x)


@dataclass(frozen=True)
class GradnormStats:
    max_rel_drift: float
    mean_rel_drift: float
    max_band_violation: float | None = None


def interface_gradnorm_stats(tube: TubeSolution, t: float, alpha: float | None = None) -> GradnormStats:
    """Drift of |p| on interface markers relative to their initial |p|.

    For grad_bounding with ``alpha`` given, also the worst excursion of |p|
    outside [beta - alpha, beta + alpha].
    """
    k = tube.time_index(t)
    sel = tube.on_interface
    if not np.any(sel):
        raise ValueError("tube has no interface markers")
    p0 = np.linalg.norm(tube.bundle.p[0, sel], axis=-1)
    pt = np.linalg.norm(tube.bundle.p[k, sel], axis=-1)
    rel = np.abs(pt - p0) / p0
    violation = None
    if tube.mode.kind == "grad_bounding" and alpha is not None:
        beta = tube.mode.beta
        violation = float(np.max(np.maximum(0.0, np.maximum((beta - alpha) - pt, pt - (beta + alpha)))))
    return GradnormStats(float(rel.max()), float(rel.mean()), violation)
