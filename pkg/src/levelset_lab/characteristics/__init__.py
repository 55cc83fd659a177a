from .constants import A_STAR, estimate_alpha, estimate_tstar, measure_v4
from .hamiltonian import (
    LINEAR,
    MODES,
    PRESERVING,
    SourceMode,
    bounding,
    characteristic_rhs,
    hamiltonian,
    hamiltonian_dphi,
    hamiltonian_dt,
)
from .integrate import (
    CharacteristicBundle,
    CharacteristicState,
    contact_residual,
    energy_residual,
    integrate_characteristic,
    integrate_characteristics,
)
from .mls import MlsReconstructor
from .tube import (
    GradnormStats,
    MarkerSeeds,
    TubeSolution,
    build_tube,
    evaluate_tube,
    interface_gradnorm_stats,
    project_to_zero,
    seed_tube,
)

__all__ = [
    "A_STAR",
    "CharacteristicBundle",
    "CharacteristicState",
    "GradnormStats",
    "LINEAR",
    "MODES",
    "MarkerSeeds",
    "MlsReconstructor",
    "PRESERVING",
    "SourceMode",
    "TubeSolution",
    "bounding",
    "build_tube",
    "characteristic_rhs",
    "contact_residual",
    "energy_residual",
    "estimate_alpha",
    "estimate_tstar",
    "evaluate_tube",
    "hamiltonian",
    "hamiltonian_dphi",
    "hamiltonian_dt",
    "integrate_characteristic",
    "integrate_characteristics",
    "interface_gradnorm_stats",
    "measure_v4",
    "project_to_zero",
    "seed_tube",
]
