"""Finite element spaces: degree-of-freedom maps and Dirichlet masks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..meshkit import Mesh
from .elements import Element, get_element


@dataclass(frozen=True)
class FeSpace:
    """A scalar or 2-vector Lagrange-type space on a mesh.

    Scalar degrees of freedom are numbered vertices first, then edge
    midpoints (P2) or cell bubbles (P1+bubble).  Vector components are
    interleaved: global dof = components * scalar_dof + component.
    dirichlet_mask marks dofs whose nodal location lies on the boundary;
    it is all-False for spaces built with dirichlet=False.
    """

    mesh: Mesh
    element: Element
    components: int
    n_scalar: int
    cell_dofs: np.ndarray  # (T, n_basis) scalar dof indices
    dirichlet_mask: np.ndarray  # (dim_total,) bool
    free_index: np.ndarray  # (dim_free,) int

    @property
    def kind(self):
        return self.element.kind

    @property
    def dim_total(self):
        return self.components * self.n_scalar

    @property
    def dim_free(self):
        return self.free_index.size

    def embed(self, free_values):
        """Zero-extend free-dof coefficients to the full space."""
        free_values = np.asarray(free_values, dtype=float)
        full = np.zeros(
            (self.dim_total,) + free_values.shape[1:], dtype=float
        )
        full[self.free_index] = free_values
        return full

    def restrict(self, full_values):
        return np.asarray(full_values, dtype=float)[self.free_index]


def make_space(mesh: Mesh, kind: str, components: int = 1, dirichlet: bool = False) -> FeSpace:
    """Build a P1, P2, or P1+bubble space with 1 or 2 components."""
    if components not in (1, 2):
        raise ValueError(f"components must be 1 or 2, got {components}")
    element = get_element(kind)

    edge_id = {tuple(e): i for i, e in enumerate(mesh.edges)}
    n_vert = mesh.num_vertices
    n_scalar = n_vert
    if kind == "p2":
        n_scalar += mesh.num_edges
    elif kind == "p1bubble":
        n_scalar += mesh.num_triangles

    cell_dofs = np.empty((mesh.num_triangles, element.n_basis), dtype=np.int64)
    scalar_boundary = np.zeros(n_scalar, dtype=bool)
    scalar_boundary[:n_vert] = mesh.boundary_vertex_mask
    for t, tri in enumerate(mesh.triangles):
        for l, (dof_kind, idx) in enumerate(element.dof_kinds):
            if dof_kind == "vertex":
                cell_dofs[t, l] = tri[idx]
            elif dof_kind == "edge":
                a, b = tri[idx], tri[(idx + 1) % 3]
                e = edge_id[(a, b) if a < b else (b, a)]
                cell_dofs[t, l] = n_vert + e
                if mesh.boundary_edge_mask[e]:
                    scalar_boundary[n_vert + e] = True
            else:  # cell bubble
                cell_dofs[t, l] = n_vert + t

    if dirichlet:
        mask = np.repeat(scalar_boundary, components)
    else:
        mask = np.zeros(components * n_scalar, dtype=bool)
    free_index = np.flatnonzero(~mask)

    return FeSpace(
        mesh=mesh,
        element=element,
        components=components,
        n_scalar=n_scalar,
        cell_dofs=cell_dofs,
        dirichlet_mask=mask,
        free_index=free_index,
    )
