"""Flat dotted-key run configuration, its schema and the preset registry.

Text format: one ``key = value`` per line, ``#`` starts a comment, blank
lines are ignored. Lists are comma separated. ``preset = name`` loads the
preset's keys first; every other key then overrides it.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Any, Callable

from ..characteristics.hamiltonian import MODES, SourceMode
from ..domain_flow.fields import FIELD_IDS
from ..errors import ParseError, UnknownKey, ValidationError
from ..eulerian.grid import MIN_CELLS
from ..eulerian.scheme import INTEGRATORS

CHECKS = ("gradient", "interface", "modes", "envelope", "tube", "residuals", "drift")
SHAPES = ("circle", "sphere", "ellipse", "plane")
ODE_METHODS = ("rk4_fixed", "rk45_adaptive")


def _float(text: str) -> float:
    return float(text)


def _opt_float(text: str) -> float | None:
    return None if text.lower() in ("none", "") else float(text)


def _int(text: str) -> int:
    value = float(text)
    if value != int(value):
        raise ValueError(f"{text!r} is not an integer")
    return int(value)


def _str(text: str) -> str:
    if not text:
        raise ValueError("empty value")
    return text


def _bool(text: str) -> bool:
    low = text.lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"{text!r} is not a boolean")


def _vector(text: str) -> tuple[float, ...] | None:
    if text.lower() in ("none", ""):
        return None
    return tuple(float(v) for v in text.split(","))


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(",") if v.strip())


def _words(text: str) -> tuple[str, ...]:
    return tuple(v.strip() for v in text.split(",") if v.strip())


def _eps(text: str) -> float | str:
    return "auto" if text.lower() == "auto" else float(text)


def _fmt(value: Any) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ",".join(_fmt(v) for v in value)
    return str(value)


# key -> (attribute, parser, default)
SCHEMA: dict[str, tuple[str, Callable[[str], Any], Any]] = {
    "preset": ("preset", _str, None),
    "seed": ("seed", _int, 0),
    "domain.dimension": ("dimension", _int, 2),
    "field.id": ("field_id", _str, "vortex"),
    "field.period": ("field_period", _opt_float, None),
    "field.omega": ("field_omega", _float, 1.0),
    "field.gamma": ("field_gamma", _float, 1.0),
    "field.radius": ("field_radius", _float, 0.48),
    "phi0.kind": ("phi0_kind", _str, "circle"),
    "phi0.center": ("phi0_center", _vector, (0.5, 0.75)),
    "phi0.radius": ("phi0_radius", _float, 0.15),
    "phi0.semi_axes": ("phi0_semi_axes", _vector, None),
    "phi0.normal": ("phi0_normal", _vector, None),
    "mode.kind": ("mode_kind", _str, "grad_preserving"),
    "mode.beta": ("mode_beta", _opt_float, None),
    "grid.n": ("n", _int, 128),
    "grid.extra_modes": ("extra_modes", _words, ()),
    "grid.extra_beta": ("extra_beta", _float, 1.0),
    "grid.dumps": ("grid_dumps", _bool, True),
    "time.T": ("T", _float, 1.0),
    "time.outputs": ("output_times", _floats, (0.25, 0.5, 0.75, 1.0)),
    "tube.band_halfwidth": ("band_halfwidth", _float, 0.03),
    "tube.spacing": ("marker_spacing", _float, 1.0 / 128),
    "tube.interface_spacing": ("interface_spacing", _float, 1.0 / 256),
    "tube.fold_threshold": ("fold_threshold", _float, 0.1),
    "ode.method": ("ode_method", _str, "rk4_fixed"),
    "ode.step": ("ode_step", _float, 1e-3),
    "ode.abs_tol": ("ode_abs_tol", _float, 1e-10),
    "ode.rel_tol": ("ode_rel_tol", _float, 1e-10),
    "scheme.cfl": ("cfl", _float, 0.4),
    "scheme.time_integrator": ("time_integrator", _str, "rk2_tvd"),
    "cutoff.eps": ("eps", _eps, "auto"),
    "cutoff.alpha_samples": ("alpha_samples", _int, 10000),
    "check.list": ("checks", _words, CHECKS),
    "check.interface_cells": ("interface_cells", _float, 2.0),
    "check.modes_cells": ("modes_cells", _float, 2.0),
    "check.envelope_cells": ("envelope_cells", _float, 4.0),
    "check.envelope_step": ("envelope_step", _float, 5e-3),
    "check.tube_cells": ("tube_cells", _float, 4.0),
    "check.gradient_tol": ("gradient_tol", _float, 1e-6),
    "check.energy_tol": ("energy_tol", _float, 1e-6),
    "check.contact_tol": ("contact_tol", _float, 1e-5),
    "check.drift_tol": ("drift_tol", _float, 1e-5),
    "check.residual_samples": ("residual_samples", _int, 100),
}


@dataclass(frozen=True)
class RunConfig:
    preset: str | None
    seed: int
    dimension: int
    field_id: str
    field_period: float | None
    field_omega: float
    field_gamma: float
    field_radius: float
    phi0_kind: str
    phi0_center: tuple[float, ...] | None
    phi0_radius: float
    phi0_semi_axes: tuple[float, ...] | None
    phi0_normal: tuple[float, ...] | None
    mode_kind: str
    mode_beta: float | None
    n: int
    extra_modes: tuple[str, ...]
    extra_beta: float
    grid_dumps: bool
    T: float
    output_times: tuple[float, ...]
    band_halfwidth: float
    marker_spacing: float
    interface_spacing: float
    fold_threshold: float
    ode_method: str
    ode_step: float
    ode_abs_tol: float
    ode_rel_tol: float
    cfl: float
    time_integrator: str
    eps: float | str
    alpha_samples: int
    checks: tuple[str, ...]
    interface_cells: float
    modes_cells: float
    envelope_cells: float
    envelope_step: float
    tube_cells: float
    gradient_tol: float
    energy_tol: float
    contact_tol: float
    drift_tol: float
    residual_samples: int

    @property
    def mode(self) -> SourceMode:
        return SourceMode(self.mode_kind, self.mode_beta)

    @property
    def h(self) -> float:
        return 1.0 / self.n

    def extra_mode_objects(self) -> list[SourceMode]:
        return [SourceMode(k, self.extra_beta if k == "grad_bounding" else None) for k in self.extra_modes]

    def to_text(self) -> str:
        """Every key with its resolved value, in schema order."""
        lines = []
        for key, (attr, _, _) in SCHEMA.items():
            lines.append(f"{key} = {_fmt(getattr(self, attr))}")
        return "\n".join(lines) + "\n"

    def echo(self) -> dict[str, Any]:
        return {key: getattr(self, attr) for key, (attr, _, _) in SCHEMA.items()}


PRESETS: dict[str, str] = {
    "zero-field-smoke": """
        field.id = zero
        phi0.center = 0.5, 0.5
        phi0.radius = 0.25
        grid.n = 32
        grid.extra_modes = linear_transport
        time.T = 0.5
        time.outputs = 0.25, 0.5
        tube.band_halfwidth = 0.1
        tube.spacing = 0.03125
        tube.interface_spacing = 0.015625
        cutoff.alpha_samples = 1000
    """,
    "rotation2d": """
        field.id = rotation_bump
        field.omega = 1.0
        phi0.center = 0.5, 0.65
        phi0.radius = 0.1
        grid.extra_modes = linear_transport, grad_bounding
    """,
    "vortex2d": """
        field.id = vortex
        phi0.center = 0.5, 0.75
        phi0.radius = 0.15
        grid.extra_modes = linear_transport, grad_bounding
    """,
    "vortex2d-reversal": """
        field.id = vortex
        field.period = 1.0
        phi0.center = 0.5, 0.75
        phi0.radius = 0.15
        mode.kind = linear_transport
        check.list = interface, envelope, tube, residuals, drift
    """,
    "shear2d": """
        field.id = shear
        field.gamma = 1.0
        phi0.center = 0.5, 0.5
        phi0.radius = 0.15
        grid.extra_modes = linear_transport
    """,
    "gradbound2d": """
        field.id = shear
        field.gamma = 1.0
        phi0.center = 0.5, 0.5
        phi0.radius = 0.15
        mode.kind = grad_bounding
        mode.beta = 1.0
        grid.extra_modes = linear_transport
    """,
    "vortex3d-smoke": """
        domain.dimension = 3
        field.id = vortex
        phi0.kind = sphere
        phi0.center = 0.35, 0.35, 0.35
        phi0.radius = 0.15
        grid.n = 32
        time.T = 0.1
        time.outputs = 0.05, 0.1
        tube.band_halfwidth = 0.06
        tube.spacing = 0.03125
        tube.interface_spacing = 0.03125
        check.interface_cells = 3.0
        check.list = gradient, interface, envelope, residuals, drift
    """,
}

PRESET_SUMMARIES = {
    "zero-field-smoke": "zero velocity, circle, n=32; fast end-to-end smoke run",
    "rotation2d": "rotation with a polynomial bump vanishing near the walls, off-centre circle",
    "vortex2d": "single-vortex deformation of a circle up to t=1, all three source modes",
    "vortex2d-reversal": "vortex with cos(pi t) factor, returns to the initial circle at t=1",
    "shear2d": "tangential shear with rate gamma=1 at the centre, centred circle",
    "gradbound2d": "gradient-bounding source beta=1 under the centred shear",
    "vortex3d-smoke": "3D deformation field, sphere, n=32, short horizon t=0.1",
}


def _lines(text: str):
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield number, line


def _split(number: int, line: str) -> tuple[str, str]:
    if "=" not in line:
        raise ParseError(f"expected 'key = value', got {line!r}", number)
    key, _, value = line.partition("=")
    key = key.strip()
    if not key or any(c.isspace() for c in key):
        raise ParseError(f"malformed key {key!r}", number)
    return key, value.strip()


def _parse_pairs(text: str) -> list[tuple[int, str, str]]:
    out = []
    seen: dict[str, int] = {}
    for number, line in _lines(text):
        key, value = _split(number, line)
        if key in seen:
            raise ParseError(f"duplicate key {key!r} (first set on line {seen[key]})", number)
        seen[key] = number
        out.append((number, key, value))
    return out


def _apply(values: dict[str, Any], pairs, source: str) -> None:
    for number, key, text in pairs:
        if key not in SCHEMA:
            raise UnknownKey(f"{source} line {number}: unknown key {key!r}")
        _, parser, _ = SCHEMA[key]
        try:
            values[key] = parser(text)
        except ValueError as exc:
            raise ParseError(f"bad value for {key!r}: {exc}", number) from None


def parse_config(text: str, overrides: list[str] | tuple[str, ...] = ()) -> RunConfig:
    """Resolve config text (plus ``key=value`` overrides) into a RunConfig."""
    pairs = _parse_pairs(text)
    override_pairs = []
    for i, item in enumerate(overrides, start=1):
        key, value = _split(i, item)
        override_pairs.append((i, key, value))
    values = {key: default for key, (_, _, default) in SCHEMA.items()}
    preset = None
    for _, key, value in pairs + override_pairs:
        if key == "preset":
            preset = value
    if preset is not None:
        if preset not in PRESETS:
            raise ValidationError(f"unknown preset {preset!r}; known: {', '.join(PRESETS)}")
        _apply(values, _parse_pairs(PRESETS[preset]), f"preset {preset}")
    _apply(values, pairs, "config")
    _apply(values, override_pairs, "override")
    kwargs = {SCHEMA[key][0]: value for key, value in values.items()}
    config = RunConfig(**kwargs)
    validate(config)
    return config


def validate(c: RunConfig) -> None:
    def need(cond: bool, message: str):
        if not cond:
            raise ValidationError(message)

    need(c.dimension in (2, 3), "domain.dimension must be 2 or 3")
    need(c.field_id in FIELD_IDS, f"field.id must be one of {FIELD_IDS}")
    need(c.field_period is None or c.field_period > 0, "field.period must be > 0")
    need(c.phi0_kind in SHAPES, f"phi0.kind must be one of {SHAPES}")
    need(c.phi0_radius > 0, "phi0.radius must be > 0")
    need(c.field_radius > 0, "field.radius must be > 0")
    if c.phi0_kind in ("circle", "sphere", "ellipse"):
        need(c.phi0_center is not None and len(c.phi0_center) == c.dimension, "phi0.center must have one entry per dimension")
    if c.phi0_kind == "ellipse":
        need(c.phi0_semi_axes is not None and len(c.phi0_semi_axes) == c.dimension, "phi0.semi_axes must have one entry per dimension")
    if c.phi0_kind == "plane":
        need(c.phi0_normal is not None and len(c.phi0_normal) == c.dimension, "phi0.normal must have one entry per dimension")
    need(c.mode_kind in MODES, f"mode.kind must be one of {MODES}")
    if c.mode_kind == "grad_bounding":
        need(c.mode_beta is not None and c.mode_beta > 0, "grad_bounding needs mode.beta > 0")
    else:
        need(c.mode_beta is None, "mode.beta is only used by grad_bounding")
    need(all(m in MODES for m in c.extra_modes), f"grid.extra_modes entries must be among {MODES}")
    need(c.mode_kind not in c.extra_modes, "grid.extra_modes must not repeat mode.kind")
    need(c.extra_beta > 0, "grid.extra_beta must be > 0")
    need(c.n >= MIN_CELLS, f"grid.n must be >= {MIN_CELLS}")
    need(c.T > 0, "time.T must be > 0")
    need(len(c.output_times) > 0, "time.outputs must not be empty")
    need(all(0 < t <= c.T for t in c.output_times), "time.outputs must lie in (0, T]")
    need(list(c.output_times) == sorted(set(c.output_times)), "time.outputs must be strictly increasing")
    need(c.band_halfwidth > 0, "tube.band_halfwidth must be > 0")
    need(c.marker_spacing > 0 and c.interface_spacing > 0, "tube spacings must be > 0")
    need(0 <= c.fold_threshold < 1, "tube.fold_threshold must lie in [0, 1)")
    need(c.ode_method in ODE_METHODS, f"ode.method must be one of {ODE_METHODS}")
    need(c.ode_step > 0 and c.ode_abs_tol > 0 and c.ode_rel_tol > 0, "ODE step and tolerances must be > 0")
    need(0 < c.cfl <= 0.9, "scheme.cfl must lie in (0, 0.9]")
    need(c.time_integrator in INTEGRATORS, f"scheme.time_integrator must be one of {INTEGRATORS}")
    need(c.eps == "auto" or c.eps > 0, "cutoff.eps must be 'auto' or > 0")
    need(c.alpha_samples > 0, "cutoff.alpha_samples must be > 0")
    need(all(k in CHECKS for k in c.checks), f"check.list entries must be among {CHECKS}")
    need(c.residual_samples > 0, "check.residual_samples must be > 0")
    need(c.envelope_step > 0, "check.envelope_step must be > 0")
    for name in ("interface_cells", "modes_cells", "envelope_cells", "tube_cells"):
        need(getattr(c, name) > 0, f"check.{name} must be > 0")


def list_presets() -> list[tuple[str, str]]:
    """(name, summary) rows of the preset registry."""
    return [(name, PRESET_SUMMARIES[name]) for name in PRESETS]


def preset_config(name: str, overrides: list[str] | tuple[str, ...] = ()) -> RunConfig:
    return parse_config(f"preset = {name}\n", overrides)


_ATTRS = {f.name for f in fields(RunConfig)}
assert _ATTRS == {attr for attr, _, _ in SCHEMA.values()}, "schema and RunConfig disagree"
