"""Matrix and load assembly plus the discrete projections.

All matrix integrands are polynomials of total degree <= 6, so the fixed
assembly rule integrates them exactly; this is what makes the divergence
and gradient couplings agree to roundoff (integration by parts).
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from ..meshkit import Mesh
from .quadrature import ASSEMBLY_DEGREE, FIELD_DEGREE, triangle_rule
from .spaces import FeSpace


def _geometry(mesh: Mesh):
    """Affine maps per triangle: Jacobians, determinants, inverse transposes."""
    va = mesh.vertices[mesh.triangles[:, 0]]
    vb = mesh.vertices[mesh.triangles[:, 1]]
    vc = mesh.vertices[mesh.triangles[:, 2]]
    jac = np.empty((len(va), 2, 2))
    jac[:, :, 0] = vb - va
    jac[:, :, 1] = vc - va
    det = jac[:, 0, 0] * jac[:, 1, 1] - jac[:, 0, 1] * jac[:, 1, 0]
    inv_t = np.empty_like(jac)
    inv_t[:, 0, 0] = jac[:, 1, 1]
    inv_t[:, 0, 1] = -jac[:, 1, 0]
    inv_t[:, 1, 0] = -jac[:, 0, 1]
    inv_t[:, 1, 1] = jac[:, 0, 0]
    inv_t /= det[:, None, None]
    return va, jac, det, inv_t


def _physical_grads(space: FeSpace, ref_points):
    """Physical basis gradients; shape (T, n_basis, nq, 2)."""
    _, _, _, inv_t = _geometry(space.mesh)
    gref = space.element.eval_grad(ref_points)
    return np.einsum("tij,bqj->tbqi", inv_t, gref)


def _physical_points(mesh: Mesh, ref_points):
    va, jac, _, _ = _geometry(mesh)
    return va[:, None, :] + np.einsum("tij,qj->tqi", jac, ref_points)


def _scatter(rows, cols, vals, shape):
    mat = sp.coo_matrix(
        (vals.ravel(), (rows.ravel(), cols.ravel())), shape=shape
    )
    return mat.tocsr()


def assemble_gram(space: FeSpace, form: str, degree: int = ASSEMBLY_DEGREE):
    """Mass or stiffness Gram on the full (unmasked) space, components included."""
    if form not in ("mass", "stiffness"):
        raise ValueError(f"form must be 'mass' or 'stiffness', got {form!r}")
    pts, wts = triangle_rule(degree)
    _, _, det, _ = _geometry(space.mesh)
    if form == "mass":
        vals = space.element.eval_basis(pts)
        ref = np.einsum("q,iq,jq->ij", wts, vals, vals)
        local = det[:, None, None] * ref[None, :, :]
    else:
        gphys = _physical_grads(space, pts)
        local = det[:, None, None] * np.einsum("q,tiqd,tjqd->tij", wts, gphys, gphys)

    # exact symmetry so that transposed entry reconstruction is bitwise equal
    local = 0.5 * (local + np.swapaxes(local, 1, 2))

    cd = space.cell_dofs
    nb = cd.shape[1]
    rows = np.broadcast_to(cd[:, :, None], (len(cd), nb, nb))
    cols = np.broadcast_to(cd[:, None, :], (len(cd), nb, nb))
    dim = space.dim_total
    if space.components == 1:
        return _scatter(rows, cols, local, (dim, dim))
    parts = []
    for c in range(space.components):
        parts.append(
            sp.coo_matrix(
                (
                    local.ravel(),
                    (
                        (space.components * rows + c).ravel(),
                        (space.components * cols + c).ravel(),
                    ),
                ),
                shape=(dim, dim),
            )
        )
    return sum(parts).tocsr()


def restrict_matrix(matrix, row_index, col_index=None):
    """Slice a sparse matrix to the given row (and column) index sets."""
    if col_index is None:
        col_index = row_index
    return matrix.tocsr()[row_index][:, col_index].tocsr()


def _coupling(Xh: FeSpace, Mh: FeSpace, mode: str):
    """Pressure-velocity couplings restricted to free velocity columns.

    mode="div":  entries  integral (d phi_j / d x_c) psi_i
    mode="grad": entries  integral phi_j (d psi_i / d x_c)
    """
    if Xh.components != 2:
        raise ValueError("velocity space must have 2 components")
    if Mh.components != 1:
        raise ValueError("pressure space must be scalar")
    pts, wts = triangle_rule(ASSEMBLY_DEGREE)
    _, _, det, _ = _geometry(Xh.mesh)
    if mode == "div":
        pvals = Mh.element.eval_basis(pts)
        vgrads = _physical_grads(Xh, pts)
        local = np.einsum("q,iq,tjqc->tijc", wts, pvals, vgrads) * det[:, None, None, None]
    elif mode == "grad":
        pgrads = _physical_grads(Mh, pts)
        vvals = Xh.element.eval_basis(pts)
        local = np.einsum("q,tiqc,jq->tijc", wts, pgrads, vvals) * det[:, None, None, None]
    else:
        raise ValueError(mode)

    T, npb, nvb, _ = local.shape
    prow = np.broadcast_to(Mh.cell_dofs[:, :, None, None], local.shape)
    comp = np.arange(2)[None, None, None, :]
    vcol_full = 2 * Xh.cell_dofs[:, None, :, None] + comp
    vcol_full = np.broadcast_to(vcol_full, local.shape)

    full_to_free = -np.ones(Xh.dim_total, dtype=np.int64)
    full_to_free[Xh.free_index] = np.arange(Xh.dim_free)
    vcol = full_to_free[vcol_full.ravel()]
    keep = vcol >= 0
    mat = sp.coo_matrix(
        (local.ravel()[keep], (prow.ravel()[keep], vcol[keep])),
        shape=(Mh.dim_total, Xh.dim_free),
    )
    return mat.tocsr()


def assemble_divergence(Xh: FeSpace, Mh: FeSpace):
    """B with B[i, j] = integral (div phi_j) psi_i over free velocity trials."""
    return _coupling(Xh, Mh, "div")


def assemble_gradient_coupling(Xh: FeSpace, Mh: FeSpace):
    """G with G[i, j] = integral phi_j . grad psi_i; equals -B for zero-trace trials."""
    return _coupling(Xh, Mh, "grad")


def assemble_field_loads(sys, field, kind: str):
    """Load vectors of an analytic field against the system's bases.

    kind="l2"  -> (integral v . phi_j)_j          on free velocity dofs
    kind="h1"  -> (integral grad v : grad phi_j)_j on free velocity dofs
    kind="div" -> (integral (div v) psi_i)_i       on all pressure dofs
    """
    Xh, Mh = sys.Xh, sys.Mh
    pts, wts = triangle_rule(FIELD_DEGREE)
    _, _, det, _ = _geometry(Xh.mesh)
    phys = _physical_points(Xh.mesh, pts)
    x, y = phys[..., 0], phys[..., 1]

    if kind == "l2":
        fvals = field.value(x, y)
        vvals = Xh.element.eval_basis(pts)
        local = np.einsum("q,tqc,jq->tjc", wts, fvals, vvals) * det[:, None, None]
        return _scatter_velocity_load(Xh, local)
    if kind == "h1":
        if field.gradient is None:
            raise ValueError("h1 load requires the field's gradient callback")
        fgrads = field.gradient(x, y)
        vgrads = _physical_grads(Xh, pts)
        local = np.einsum("q,tqcd,tjqd->tjc", wts, fgrads, vgrads) * det[:, None, None]
        return _scatter_velocity_load(Xh, local)
    if kind == "div":
        if field.divergence is None:
            raise ValueError("div load requires the field's divergence callback")
        fdiv = field.divergence(x, y)
        pvals = Mh.element.eval_basis(pts)
        local = np.einsum("q,tq,iq->ti", wts, fdiv, pvals) * det[:, None]
        out = np.zeros(Mh.dim_total)
        np.add.at(out, Mh.cell_dofs.ravel(), local.ravel())
        return out
    raise ValueError(f"unknown load kind {kind!r}")


def _scatter_velocity_load(Xh: FeSpace, local):
    full = np.zeros(Xh.dim_total)
    comp = np.arange(2)[None, None, :]
    gdofs = 2 * Xh.cell_dofs[:, :, None] + comp
    np.add.at(full, gdofs.ravel(), local.ravel())
    return full[Xh.free_index]


def project_piecewise_constant(Mh: FeSpace, q):
    """Per-triangle averages (1/|T|) integral_T q_h of a pressure function."""
    pts, wts = triangle_rule(ASSEMBLY_DEGREE)
    vals = Mh.element.eval_basis(pts)
    q = np.asarray(q, dtype=float)
    qh = q[Mh.cell_dofs] @ vals  # (T, nq)
    # (1/|T|) * detJ * sum(w q) with detJ = 2|T| and sum(w) = 1/2
    return 2.0 * (qh @ wts)


def triangle_areas(mesh: Mesh):
    _, _, det, _ = _geometry(mesh)
    return 0.5 * det


def evaluate_norms(space: FeSpace, coeffs, which=("l2", "h1semi", "h1")):
    """L2, H1-seminorm, and full H1 norms of a coefficient vector.

    coeffs has full-space length; use FeSpace.embed for free-dof vectors.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape[0] != space.dim_total:
        raise ValueError("coefficient length does not match the space")
    out = {}
    need_l2 = "l2" in which or "h1" in which
    need_semi = "h1semi" in which or "h1" in which
    if need_l2:
        mass = assemble_gram(space, "mass")
        l2sq = float(coeffs @ (mass @ coeffs))
    if need_semi:
        stiff = assemble_gram(space, "stiffness")
        semisq = float(coeffs @ (stiff @ coeffs))
    if "l2" in which:
        out["l2"] = np.sqrt(max(l2sq, 0.0))
    if "h1semi" in which:
        out["h1semi"] = np.sqrt(max(semisq, 0.0))
    if "h1" in which:
        out["h1"] = np.sqrt(max(l2sq + semisq, 0.0))
    return out


def evaluate_on_triangles(space: FeSpace, coeffs, ref_points):
    """Values of a discrete function at reference points of every triangle.

    Returns (T, nq) for scalar spaces and (T, nq, 2) for vector spaces.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    vals = space.element.eval_basis(ref_points)  # (nb, nq)
    if space.components == 1:
        return np.einsum("tb,bq->tq", coeffs[space.cell_dofs], vals)
    out = np.empty((space.cell_dofs.shape[0], ref_points.shape[0], 2))
    for c in range(2):
        cc = coeffs[2 * space.cell_dofs + c]
        out[..., c] = np.einsum("tb,bq->tq", cc, vals)
    return out


def gradients_on_triangles(space: FeSpace, coeffs, ref_points):
    """Gradients of a discrete function at reference points of every triangle.

    Returns (T, nq, 2) for scalar spaces and (T, nq, 2, 2) for vector spaces,
    with the same (component, direction) layout as AnalyticField.gradient.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    gphys = _physical_grads(space, ref_points)  # (T, nb, nq, 2)
    if space.components == 1:
        return np.einsum("tb,tbqd->tqd", coeffs[space.cell_dofs], gphys)
    T, _, nq, _ = gphys.shape
    out = np.empty((T, nq, 2, 2))
    for c in range(2):
        cc = coeffs[2 * space.cell_dofs + c]
        out[:, :, c, :] = np.einsum("tb,tbqd->tqd", cc, gphys)
    return out


def field_error_norms(Xh: FeSpace, full_coeffs, field):
    """Quadrature norms of an analytic field and of its deviation from a
    discrete velocity function.

    Returns a dict with l2_error, h1semi_error, field_l2, field_h1semi.
    """
    pts, wts = triangle_rule(FIELD_DEGREE)
    _, _, det, _ = _geometry(Xh.mesh)
    phys = _physical_points(Xh.mesh, pts)
    x, y = phys[..., 0], phys[..., 1]
    fv = field.value(x, y)
    uh = evaluate_on_triangles(Xh, full_coeffs, pts)

    def integrate(sq):
        return float(np.einsum("t,q,tq->", det, wts, sq))

    err = fv - uh
    out = {
        "l2_error": np.sqrt(integrate(np.sum(err**2, axis=-1))),
        "field_l2": np.sqrt(integrate(np.sum(fv**2, axis=-1))),
    }
    if field.gradient is not None:
        fg = field.gradient(x, y)
        gh = gradients_on_triangles(Xh, full_coeffs, pts)
        gerr = fg - gh
        out["h1semi_error"] = np.sqrt(integrate(np.sum(gerr**2, axis=(-2, -1))))
        out["field_h1semi"] = np.sqrt(integrate(np.sum(fg**2, axis=(-2, -1))))
    return out
