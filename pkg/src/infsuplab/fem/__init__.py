"""Reference elements, quadrature, spaces, assembly, and analytic fields."""

from .assembly import (
    assemble_divergence,
    assemble_field_loads,
    assemble_gradient_coupling,
    assemble_gram,
    evaluate_norms,
    evaluate_on_triangles,
    field_error_norms,
    gradients_on_triangles,
    project_piecewise_constant,
    restrict_matrix,
    triangle_areas,
)
from .elements import Element, get_element
from .fields import FIELD_REGISTRY, AnalyticField, divfree_field, generic_field
from .quadrature import ASSEMBLY_DEGREE, FIELD_DEGREE, triangle_rule
from .spaces import FeSpace, make_space
from .system import ELEMENT_PAIRS, StokesSystem, build_stokes_system, l2_project_gradient

__all__ = [
    "ASSEMBLY_DEGREE",
    "FIELD_DEGREE",
    "ELEMENT_PAIRS",
    "AnalyticField",
    "Element",
    "FeSpace",
    "FIELD_REGISTRY",
    "StokesSystem",
    "assemble_divergence",
    "assemble_field_loads",
    "assemble_gradient_coupling",
    "assemble_gram",
    "build_stokes_system",
    "divfree_field",
    "evaluate_norms",
    "evaluate_on_triangles",
    "field_error_norms",
    "generic_field",
    "get_element",
    "gradients_on_triangles",
    "l2_project_gradient",
    "make_space",
    "project_piecewise_constant",
    "restrict_matrix",
    "triangle_areas",
    "triangle_rule",
]
