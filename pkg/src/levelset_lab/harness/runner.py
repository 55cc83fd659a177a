"""Paired marker/grid experiments, their checks and on-disk artifacts."""

from __future__ import annotations

import io
import json
import os
import shutil
import tempfile
import time
import traceback
from dataclasses import dataclass, field as dc_field
from itertools import combinations
from pathlib import Path
from typing import Any

import numpy as np

from ..analysis.interface import extract_interface, hausdorff, marker_interface
from ..analysis.metrics import compare_in_tube, drift_markers, gradient_drift_unmodified
from ..characteristics.constants import estimate_alpha, estimate_tstar, measure_v4
from ..characteristics.hamiltonian import LINEAR, SourceMode
from ..characteristics.integrate import contact_residual, energy_residual, integrate_characteristics
from ..characteristics.tube import TubeSolution, build_tube, interface_gradnorm_stats
from ..domain_flow.domain import DomainSpec
from ..domain_flow.fields import VelocityField, make_field
from ..domain_flow.ode import OdeOptions
from ..domain_flow.shapes import make_shape
from ..errors import BandEmpty, ConfigError, LevelSetLabError
from ..eulerian.barriers import BarrierConfig, envelope_check
from ..eulerian.cutoffs import CutoffConfig, default_eps, measure_v0
from ..eulerian.grid import GridField, GridSpec, write_grid
from ..eulerian.scheme import BoundaryData, SchemeConfig, run_to_time
from .config import RunConfig

PASS, FAIL, SKIP = "pass", "fail", "skip"
MANIFEST = "manifest.json"


@dataclass
class CheckResult:
    verdict: str
    detail: dict[str, Any] = dc_field(default_factory=dict)


@dataclass
class OutputManifest:
    run_id: str
    config: dict[str, Any]
    constants: dict[str, Any]
    files: list[str]
    wall_clock: float
    checks: dict[str, CheckResult]
    error: str | None = None
    directory: str | None = None

    @property
    def passed(self) -> bool:
        return self.error is None and all(c.verdict != FAIL for c in self.checks.values())

    def to_json(self) -> str:
        data = {
            "run_id": self.run_id,
            "config": {k: list(v) if isinstance(v, tuple) else v for k, v in self.config.items()},
            "constants": self.constants,
            "files": self.files,
            "wall_clock_seconds": self.wall_clock,
            "checks": {k: {"verdict": c.verdict, **c.detail} for k, c in self.checks.items()},
            "error": self.error,
        }
        return json.dumps(data, indent=2, sort_keys=False, default=_jsonable) + "\n"


def _jsonable(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"cannot serialise {type(value).__name__}")


@dataclass
class Setup:
    """Objects built from a config."""

    config: RunConfig
    domain: DomainSpec
    field: VelocityField
    shape: Any
    opts: OdeOptions


def build_setup(config: RunConfig) -> Setup:
    d = config.dimension
    domain = DomainSpec.unit_box(d)
    params: dict[str, Any] = {}
    if config.field_id == "vortex" and config.field_period is not None:
        params["period"] = config.field_period
    elif config.field_id in ("rotation", "rotation_bump"):
        params["omega"] = config.field_omega
        if config.field_id == "rotation_bump":
            params["radius"] = config.field_radius
    elif config.field_id == "shear":
        params["gamma"] = config.field_gamma
    field = make_field(config.field_id, domain, **params)
    kind = config.phi0_kind
    if kind in ("circle", "sphere"):
        shape = make_shape(kind, center=config.phi0_center, radius=config.phi0_radius)
    elif kind == "ellipse":
        shape = make_shape(kind, center=config.phi0_center, semi_axes=config.phi0_semi_axes)
    else:
        shape = make_shape(kind, normal=config.phi0_normal, offset_point=config.phi0_center or (0.5,) * d)
    opts = OdeOptions(config.ode_method, config.ode_step, config.ode_abs_tol, config.ode_rel_tol)
    return Setup(config, domain, field, shape, opts)


@dataclass
class GridRun:
    mode: SourceMode
    cut: CutoffConfig
    v0: float
    snapshots: list[GridField]
    diagnostics_csv: str


def run_grid(setup: Setup, mode: SourceMode, n: int, eps: float, alpha: float) -> GridRun:
    """Eulerian run of one mode from phi0 to T with snapshots at the output times."""
    c = setup.config
    spec = GridSpec(setup.domain, n)
    cut = CutoffConfig(setup.domain, eps, alpha=alpha, beta=mode.beta)
    v0 = measure_v0(mode, setup.field, cut, c.T)
    scheme = SchemeConfig(cfl=c.cfl, time_integrator=c.time_integrator, v0_bound=v0)
    state0 = GridField(0.0, np.asarray(setup.shape.value(spec.nodes), float), spec)
    boundary = BoundaryData(setup.field, setup.shape.value, spec, setup.opts)
    snaps, diag = run_to_time(state0, c.T, setup.field, cut, mode, scheme, c.output_times, boundary)
    return GridRun(mode, cut, v0, snaps, diag.to_csv())


def _finite_or_none(v: float) -> float | None:
    return float(v) if np.isfinite(v) else None


def _fmt(v: float) -> str:
    return "%.17g" % v


def _csv(header: list[str], rows: list[list[Any]]) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(v) if isinstance(v, float) else str(v) for v in row) + "\n")
    return buf.getvalue()


def _residual_check(setup: Setup, tube: TubeSolution, rng: np.random.Generator) -> tuple[CheckResult, str]:
    """Energy and contact residuals along random characteristics in the seeding band."""
    c = setup.config
    d = c.dimension
    pool = []
    while sum(len(p) for p in pool) < c.residual_samples:
        x = setup.domain.sample_interior(rng, 4 * c.residual_samples)
        keep = np.abs(setup.shape.value(x)) <= c.band_halfwidth
        keep &= np.linalg.norm(setup.shape.grad(x), axis=-1) > 1e-6
        pool.append(x[keep])
    xi = np.vstack(pool)[: c.residual_samples]
    bundle = integrate_characteristics(
        tube.mode,
        setup.field,
        xi,
        setup.shape.grad(xi),
        setup.shape.value(xi),
        0.0,
        c.T,
        setup.opts,
        with_variational=True,
        hess0=setup.shape.hess(xi),
        output_times=np.asarray(c.output_times),
        track_energy=True,
        freeze=np.ones(len(xi), bool),
    )
    valid = bundle.times[:, None] < bundle.frozen_time[None, :]
    energy = np.where(valid, energy_residual(tube.mode, setup.field, bundle), 0.0)
    contact = np.where(valid, contact_residual(bundle), 0.0)
    e_max, c_max = float(np.max(energy)), float(np.max(contact))
    ok = e_max <= c.energy_tol and c_max <= c.contact_tol
    rows = [[float(t), float(np.max(energy[k])), float(np.max(contact[k])), int(np.sum(valid[k]))] for k, t in enumerate(bundle.times)]
    csv = _csv(["time", "max_energy_residual", "max_contact_residual", "live_characteristics"], rows)
    detail = {
        "samples": int(len(xi)),
        "dimension": d,
        "max_energy_residual": e_max,
        "max_contact_residual": c_max,
        "energy_tol": c.energy_tol,
        "contact_tol": c.contact_tol,
    }
    return CheckResult(PASS if ok else FAIL, detail), csv


def execute(config: RunConfig) -> tuple[dict[str, str], dict[str, Any], dict[str, CheckResult]]:
    """Run everything in memory; returns (files, constants, checks)."""
    c = config
    setup = build_setup(c)
    rng = np.random.default_rng(c.seed)
    files: dict[str, str] = {}
    checks: dict[str, CheckResult] = {}
    h = 1.0 / c.n

    alpha = estimate_alpha(setup.field, setup.domain, c.T, c.alpha_samples, rng)
    tube = build_tube(
        c.mode,
        setup.field,
        setup.shape,
        c.band_halfwidth,
        c.marker_spacing,
        c.T,
        c.output_times,
        setup.opts,
        interface_spacing=c.interface_spacing,
        fold_threshold=c.fold_threshold,
    )
    files["markers.csv"] = tube.to_csv()
    v4 = measure_v4(tube.bundle)
    eps = default_eps(setup.field, tube.interface_points(0.0), c.T, h) if c.eps == "auto" else float(c.eps)

    runs = [run_grid(setup, c.mode, c.n, eps, alpha)]
    for extra in c.extra_mode_objects():
        runs.append(run_grid(setup, extra, c.n, eps, alpha))
    main = runs[0]
    for run in runs:
        files[f"grid_diagnostics_{run.mode.kind}.csv"] = run.diagnostics_csv
    if c.grid_dumps:
        for k, snap in enumerate(main.snapshots):
            buf = io.StringIO()
            write_grid(buf, snap)
            files[f"grid_{c.mode_kind}_{k:02d}.txt"] = buf.getvalue()

    constants = {
        "alpha": alpha,
        "V0": main.v0,
        "V4": v4,
        "t_star_advisory": estimate_tstar(v4),
        "eps": eps,
        "h": h,
        "marker_count": tube.marker_count,
        "interface_marker_count": int(np.sum(tube.on_interface)),
        "valid_halfwidth": {_fmt(t): _finite_or_none(tube.valid_halfwidth(t)) for t in c.output_times},
        "V0_by_mode": {run.mode.kind: run.v0 for run in runs},
    }

    if "gradient" in c.checks:
        rows, worst = [], 0.0
        if c.mode_kind == "linear_transport":
            checks["gradient"] = CheckResult(SKIP, {"reason": "linear_transport does not control |grad phi|"})
        else:
            band_alpha = alpha if c.mode_kind == "grad_bounding" else None
            for t in c.output_times:
                s = interface_gradnorm_stats(tube, t, band_alpha)
                value = s.max_rel_drift if band_alpha is None else s.max_band_violation
                worst = max(worst, value)
                rows.append([float(t), s.max_rel_drift, s.mean_rel_drift, "" if s.max_band_violation is None else _fmt(s.max_band_violation)])
            files["gradient.csv"] = _csv(["time", "max_rel_drift", "mean_rel_drift", "max_band_violation"], rows)
            measure = "max_rel_drift" if band_alpha is None else "max_band_violation"
            checks["gradient"] = CheckResult(
                PASS if worst <= c.gradient_tol else FAIL, {measure: worst, "tol": c.gradient_tol}
            )

    if "interface" in c.checks:
        rows, worst = [], 0.0
        tol = c.interface_cells * h
        for snap in main.snapshots:
            dist = hausdorff(extract_interface(snap), marker_interface(tube, snap.t))
            worst = max(worst, dist)
            rows.append([snap.t, dist, dist / h, tol, PASS if dist <= tol else FAIL])
        files["interface_errors.csv"] = _csv(["time", "hausdorff", "hausdorff_cells", "tol", "verdict"], rows)
        checks["interface"] = CheckResult(PASS if worst <= tol else FAIL, {"max_hausdorff": worst, "tol": tol})

    if "modes" in c.checks:
        if len(runs) < 2:
            checks["modes"] = CheckResult(SKIP, {"reason": "no extra grid modes configured"})
        else:
            rows, worst = [], 0.0
            tol = c.modes_cells * h
            for a, b in combinations(runs, 2):
                for sa, sb in zip(a.snapshots, b.snapshots):
                    dist = hausdorff(extract_interface(sa), extract_interface(sb))
                    worst = max(worst, dist)
                    rows.append([a.mode.kind, b.mode.kind, sa.t, dist, dist / h, PASS if dist <= tol else FAIL])
            files["mode_invariance.csv"] = _csv(["mode_a", "mode_b", "time", "hausdorff", "hausdorff_cells", "verdict"], rows)
            checks["modes"] = CheckResult(PASS if worst <= tol else FAIL, {"max_hausdorff": worst, "tol": tol})

    if "envelope" in c.checks:
        tol = c.envelope_cells * h
        cfg = BarrierConfig(main.v0, main.cut.eps_at(c.T))
        rep = envelope_check(main.snapshots, setup.field, setup.shape.value, cfg, tol, OdeOptions(step=c.envelope_step))
        rows = [[float(t), int(n), int(v), float(e)] for t, n, v, e in zip(rep.times, rep.samples, rep.violations, rep.max_excess)]
        files["envelope.csv"] = _csv(["time", "samples", "violations", "max_excess"], rows)
        checks["envelope"] = CheckResult(
            PASS if rep.passed else FAIL, {"violation_fraction": rep.violation_fraction, "tol": tol}
        )

    if "tube" in c.checks:
        tol = c.tube_cells * h
        try:
            rep = compare_in_tube(main.snapshots, tube)
        except BandEmpty as exc:
            checks["tube"] = CheckResult(FAIL, {"error": str(exc)})
        else:
            files["tube_comparison.csv"] = rep.to_csv()
            worst = float(np.max(rep.sup_error_in_band))
            checks["tube"] = CheckResult(
                PASS if worst <= tol else FAIL,
                {"max_sup_error": worst, "tol": tol, "sign_mismatches": int(np.sum(rep.sign_mismatches)), "m0": rep.m0},
            )

    if "residuals" in c.checks:
        checks["residuals"], files["residuals.csv"] = _residual_check(setup, tube, rng)

    if "drift" in c.checks:
        ids = np.flatnonzero(tube.on_interface)
        xi = tube.xi0[ids]
        bundle = drift_markers(setup.field, xi, setup.shape.grad(xi), c.T, c.ode_step)
        stats = gradient_drift_unmodified(setup.field, bundle)
        files["drift.csv"] = _csv(
            ["max_residual", "max_rate", "max_rel_drift"], [[stats.max_residual, stats.max_rate, stats.max_rel_drift]]
        )
        checks["drift"] = CheckResult(
            PASS if stats.max_residual <= c.drift_tol else FAIL,
            {"max_residual": stats.max_residual, "max_rel_drift_unmodified": stats.max_rel_drift, "tol": c.drift_tol},
        )
    return files, constants, checks


def run_id(config: RunConfig) -> str:
    return f"{config.preset or 'custom'}-n{config.n}-seed{config.seed}"


def set_threads(threads: int | None) -> int | None:
    """Cap numba's worker pool; the kernels themselves are serial."""
    if threads is None:
        return None
    if threads < 1:
        raise ConfigError("threads must be >= 1")
    import numba

    numba.set_num_threads(min(threads, numba.config.NUMBA_NUM_THREADS))
    return threads


def run_experiment(config: RunConfig, out_dir: str | os.PathLike, threads: int | None = None) -> OutputManifest:
    """Run a config and write its artifacts to out_dir/<run id>.

    Output is assembled in a temporary sibling directory and renamed into
    place, so a crash never leaves a half-written run directory. Module
    errors are caught and recorded in the manifest.
    """
    set_threads(threads)
    start = time.perf_counter()
    rid = run_id(config)
    root = Path(out_dir)
    root.mkdir(parents=True, exist_ok=True)
    error = None
    try:
        files, constants, checks = execute(config)
    except LevelSetLabError as exc:
        files, constants, checks = {}, {}, {}
        error = f"{type(exc).__name__}: {exc}\n{traceback.format_exc()}"
    listed = sorted(files) + [MANIFEST]
    manifest = OutputManifest(rid, config.echo(), constants, listed, time.perf_counter() - start, checks, error)
    for name in config.checks:
        manifest.checks.setdefault(name, CheckResult(FAIL if error else SKIP, {"reason": "run aborted" if error else "not run"}))
    tmp = Path(tempfile.mkdtemp(prefix=f".{rid}-", dir=root))
    try:
        for name, text in files.items():
            (tmp / name).write_text(text)
        (tmp / MANIFEST).write_text(manifest.to_json())
        final = root / rid
        if final.exists():
            if not (final / MANIFEST).exists():
                raise ConfigError(f"{final} exists and is not a previous run directory")
            shutil.rmtree(final)
        tmp.rename(final)
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    manifest.directory = str(final)
    return manifest


def check_manifest(path: str | os.PathLike) -> tuple[bool, list[str]]:
    """Re-read a manifest: every listed file must exist and be non-empty, no check may fail."""
    path = Path(path)
    if path.is_dir():
        path = path / MANIFEST
    data = json.loads(path.read_text())
    problems = []
    for name in data.get("files", []):
        f = path.parent / name
        if not f.exists() or f.stat().st_size == 0:
            problems.append(f"missing or empty file: {name}")
    if data.get("error"):
        problems.append("run error: " + data["error"].splitlines()[0])
    for name, check in data.get("checks", {}).items():
        if check.get("verdict") == FAIL:
            problems.append(f"check failed: {name}")
    return not problems, problems
