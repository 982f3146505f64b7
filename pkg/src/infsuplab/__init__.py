"""infsuplab: discrete inf-sup constants and Fortin projections for mixed
Stokes discretizations on structured unit-square triangulations."""

from .fem import (
    AnalyticField,
    build_stokes_system,
    divfree_field,
    generic_field,
    l2_project_gradient,
    make_space,
)
from .infsup import (
    DegenerateLevelError,
    FortinResult,
    FortinSingularError,
    InfSupReport,
    compute_report,
    fortin_diagnostics,
    fortin_discrete,
    fortin_h1,
    fortin_l2,
    glbb_constant,
    inverse_constants,
    lbb_constant,
    verfurth_fit,
    verfurth_gap,
    weighted_constant,
)
from .meshkit import Mesh, build_structured_mesh, dump_mesh, mesh_metrics, refine_uniform

__version__ = "0.1.0"

__all__ = [
    "AnalyticField",
    "DegenerateLevelError",
    "FortinResult",
    "FortinSingularError",
    "InfSupReport",
    "Mesh",
    "build_stokes_system",
    "build_structured_mesh",
    "compute_report",
    "divfree_field",
    "dump_mesh",
    "fortin_diagnostics",
    "fortin_discrete",
    "fortin_h1",
    "fortin_l2",
    "generic_field",
    "glbb_constant",
    "inverse_constants",
    "l2_project_gradient",
    "lbb_constant",
    "make_space",
    "mesh_metrics",
    "refine_uniform",
    "verfurth_fit",
    "verfurth_gap",
    "weighted_constant",
]
