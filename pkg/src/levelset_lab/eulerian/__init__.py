from .barriers import (
    BarrierConfig,
    EnvelopeReport,
    barrier_pair,
    barrier_rho,
    barrier_rho_tilde,
    barrier_S,
    envelope_check,
    switching_rate,
)
from .cutoffs import (
    CutoffConfig,
    default_eps,
    lipschitz_in_p,
    measure_v0,
    orbit_boundary_distance,
    simple_mode_bound,
    smoothstep,
    source_R,
)
from .grid import GridField, GridSpec, read_grid, write_grid
from .scheme import (
    BoundaryData,
    DiagnosticsSeries,
    GridOperator,
    SchemeConfig,
    boundary_value,
    cfl_dt,
    numerical_hamiltonian,
    run_to_time,
    step,
)

__all__ = [
    "BarrierConfig",
    "BoundaryData",
    "CutoffConfig",
    "DiagnosticsSeries",
    "EnvelopeReport",
    "GridField",
    "GridOperator",
    "GridSpec",
    "SchemeConfig",
    "barrier_S",
    "barrier_pair",
    "barrier_rho",
    "barrier_rho_tilde",
    "boundary_value",
    "cfl_dt",
    "default_eps",
    "envelope_check",
    "lipschitz_in_p",
    "measure_v0",
    "numerical_hamiltonian",
    "orbit_boundary_distance",
    "read_grid",
    "run_to_time",
    "simple_mode_bound",
    "smoothstep",
    "source_R",
    "step",
    "switching_rate",
    "write_grid",
]
