from .interface import InterfaceSet, distance_to_set, extract_interface, hausdorff, marker_interface
from .metrics import (
    ComparisonReport,
    ConvergenceRow,
    DriftStats,
    compare_in_tube,
    convergence_csv,
    convergence_study,
    default_m0,
    drift_markers,
    format_table,
    gradient_drift_unmodified,
)

__all__ = [
    "ComparisonReport",
    "ConvergenceRow",
    "DriftStats",
    "InterfaceSet",
    "compare_in_tube",
    "convergence_csv",
    "convergence_study",
    "default_m0",
    "distance_to_set",
    "drift_markers",
    "extract_interface",
    "format_table",
    "gradient_drift_unmodified",
    "hausdorff",
    "marker_interface",
]
