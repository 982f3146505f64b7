"""Assembled velocity-pressure systems for the supported element pairs."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from ..linalg import factor_spd
from ..meshkit import Mesh, MeshMetrics, mesh_metrics
from .assembly import assemble_divergence, assemble_gram, restrict_matrix
from .spaces import FeSpace, make_space

# velocity kind, pressure kind; all pressures continuous P1
ELEMENT_PAIRS = {
    "taylor_hood": ("p2", "p1"),
    "mini": ("p1bubble", "p1"),
    "p1p1": ("p1", "p1"),
}


@dataclass(frozen=True)
class StokesSystem:
    """All Gram and coupling matrices of one element pair on one mesh.

    A and Mv are the velocity stiffness and mass Grams on free dofs; Mp and
    Kp the pressure mass and stiffness on the full pressure space (the
    constant-pressure kernel is handled downstream by deflation or a
    multiplier row, never by masking).  B[i, j] = integral (div phi_j) psi_i.
    """

    pair: str
    Xh: FeSpace
    Mh: FeSpace
    A: sp.csr_matrix
    Mv: sp.csr_matrix
    Mp: sp.csr_matrix
    Kp: sp.csr_matrix
    B: sp.csr_matrix
    metrics: MeshMetrics
    ones_p: np.ndarray

    @property
    def mean_weight(self):
        """Row vector of integral psi_i, the mass-weighted mean functional."""
        return self.Mp @ self.ones_p


def build_stokes_system(mesh: Mesh, pair: str) -> StokesSystem:
    if pair not in ELEMENT_PAIRS:
        raise ValueError(f"unknown element pair {pair!r}; choose from {sorted(ELEMENT_PAIRS)}")
    vkind, pkind = ELEMENT_PAIRS[pair]
    Xh = make_space(mesh, vkind, components=2, dirichlet=True)
    Mh = make_space(mesh, pkind, components=1, dirichlet=False)
    free = Xh.free_index
    A = restrict_matrix(assemble_gram(Xh, "stiffness"), free)
    Mv = restrict_matrix(assemble_gram(Xh, "mass"), free)
    Mp = assemble_gram(Mh, "mass")
    Kp = assemble_gram(Mh, "stiffness")
    B = assemble_divergence(Xh, Mh)
    return StokesSystem(
        pair=pair,
        Xh=Xh,
        Mh=Mh,
        A=A,
        Mv=Mv,
        Mp=Mp,
        Kp=Kp,
        B=B,
        metrics=mesh_metrics(mesh),
        ones_p=np.ones(Mh.dim_total),
    )


def l2_project_gradient(sys: StokesSystem, q, mv_factor=None):
    """L2-project grad q_h onto the velocity space; returns free coefficients.

    Solves Mv z = load(grad q_h); the load equals -B^T q by integration by
    parts against the zero-trace velocity basis.
    """
    if mv_factor is None:
        mv_factor = factor_spd(sys.Mv)
    rhs = -(sys.B.T @ np.asarray(q, dtype=float))
    return mv_factor.solve(rhs)
