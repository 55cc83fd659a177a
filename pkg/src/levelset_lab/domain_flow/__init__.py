from .domain import DomainSpec
from .fields import FIELD_IDS, VelocityField, builtin_fields, make_field, radial_outward
from .flow import SubtangentialReport, check_subtangential, domain_guard, eval_flow_map, reference_levelset
from .ode import OdeOptions, integrate
from .shapes import Constant, Ellipsoid, Plane, Sphere, make_shape

__all__ = [
    "Constant",
    "DomainSpec",
    "Ellipsoid",
    "FIELD_IDS",
    "OdeOptions",
    "Plane",
    "Sphere",
    "SubtangentialReport",
    "VelocityField",
    "builtin_fields",
    "check_subtangential",
    "domain_guard",
    "eval_flow_map",
    "integrate",
    "make_field",
    "make_shape",
    "radial_outward",
    "reference_levelset",
]
