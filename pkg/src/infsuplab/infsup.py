"""Discrete inf-sup constants, Fortin projectors, and their diagnostics.

Every constant is the square root of the smallest eigenvalue of a pressure
Schur-complement pencil B (inner Gram)^{-1} B^T q = lambda (pressure Gram) q
with the constant-pressure direction deflated.  Applying the Schur operator
costs one solve with the factored inner Gram; inverting it costs one solve
with the bordered KKT factorization.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import linalg as la
from .fem.assembly import assemble_field_loads, field_error_norms
from .fem.system import StokesSystem, l2_project_gradient

DEGENERATE_TOL = 1e-12

# default epsilon grid; 1e-6 and 1e3 act as limit probes for the
# small- and large-epsilon regimes
EPS_GRID = (1e-4, 1e-3, 1e-2, 1e-1, 1.0)
EPS_LIMIT_PROBES = (1e-6, 1e3)


class DegenerateLevelError(RuntimeError):
    """A computed constant fell below the degeneracy threshold."""


class FortinSingularError(RuntimeError):
    """The Fortin saddle system is singular at this refinement level."""


@dataclass(frozen=True)
class FortinResult:
    """Velocity projection z, auxiliary pressure p (mass-weighted mean zero),
    the saddle solve residual, and the variant ("l2" or "h1")."""

    z: np.ndarray
    p: np.ndarray
    solve_residual: float
    variant: str


@dataclass(frozen=True)
class InfSupReport:
    """One refinement level's constants and attaining pressure modes."""

    level: int
    h: float
    beta_lbb: float
    c_glbb: float
    weighted: tuple
    c_inv_velocity: float
    c_inv_pressure: float
    worst_modes: dict = field(default_factory=dict)


def _schur_pencil(sys: StokesSystem, inner):
    inner_factor = la.factor_spd(inner)
    kkt = la.SaddleFactorization(inner, sys.B, mean_weight=sys.mean_weight)
    return la.SchurOperator(sys.B, inner_factor, kkt=kkt)


def _smallest(sys, inner, pressure_gram, tol=1e-8):
    op = _schur_pencil(sys, inner)
    res = la.smallest_eigs(op, pressure_gram, [sys.ones_p], k=1, tol=tol)
    lam = float(res.eigenvalues[0])
    if lam < DEGENERATE_TOL**2:
        raise DegenerateLevelError(
            f"numerically singular level: constant {np.sqrt(max(lam, 0.0)):.3e} below {DEGENERATE_TOL}"
        )
    return np.sqrt(lam), res.eigenvectors[:, 0]


def lbb_constant(sys: StokesSystem):
    """Classical inf-sup constant: velocity measured in the H1 seminorm,
    pressure in L2; returns (beta, attaining mode)."""
    return _smallest(sys, sys.A, sys.Mp)


def glbb_constant(sys: StokesSystem):
    """Generalized inf-sup constant: velocity in L2, pressure in the H1
    seminorm; equals the coercivity of the velocity L2 projection on
    pressure gradients, hence always <= 1."""
    return _smallest(sys, sys.Mv, sys.Kp)


def lbb_h1full_constant(sys: StokesSystem):
    """LBB-type constant with the full H1 velocity norm (large-eps limit)."""
    return _smallest(sys, sys.Mv + sys.A, sys.Mp)


def glbb_h1full_constant(sys: StokesSystem):
    """GLBB-type constant with the full H1 pressure norm (small-eps limit)."""
    return _smallest(sys, sys.Mv, (sys.Mp + sys.Kp).tocsr())


class WeightedPressureGram:
    """Gram of the infimal-convolution pressure norm at a given eps.

    Minimizing ||q1||_H1^2 + eps^{-2} ||q2||_L2^2 over discrete splittings
    q1 + q2 = q gives the Schur-complement form
    N = H - H (H + eps^{-2} Mp)^{-1} H with H the pressure H1 Gram.
    """

    def __init__(self, sys: StokesSystem, eps: float):
        self.H = (sys.Mp + sys.Kp).tocsc()
        self.shift = la.factor_spd((self.H + eps**-2 * sys.Mp).tocsc())
        self.shape = self.H.shape
        self.eps = eps

    def __matmul__(self, x):
        hx = self.H @ x
        return hx - self.H @ self.shift.solve(hx)

    def quad_form(self, q):
        return float(q @ (self @ q))

    def dense(self):
        return np.asarray(self @ np.eye(self.shape[0]))


def weighted_constant(sys: StokesSystem, eps: float):
    """eps-weighted inf-sup constant; velocity norm L2 + eps^2 H1, pressure
    norm the infimal convolution of H1 and eps^{-1} L2."""
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    W = ((1.0 + eps**2) * sys.Mv + eps**2 * sys.A).tocsr()
    N = WeightedPressureGram(sys, eps)
    op = _schur_pencil(sys, W)
    res = la.smallest_eigs(op, N, [sys.ones_p], k=1, tol=1e-8)
    lam = float(res.eigenvalues[0])
    if lam < DEGENERATE_TOL**2:
        raise DegenerateLevelError(
            f"numerically singular level at eps={eps:g}"
        )
    return np.sqrt(lam), res.eigenvectors[:, 0]


def _fortin_kkt(sys: StokesSystem, variant: str):
    inner = sys.Mv if variant == "l2" else sys.A
    hypothesis = "GLBB" if variant == "l2" else "LBB"
    try:
        return la.SaddleFactorization(inner, sys.B, mean_weight=sys.mean_weight)
    except la.RankDeficiencyError as exc:
        raise FortinSingularError(
            f"{hypothesis} hypothesis violated at this level: {exc}"
        ) from exc


def _fortin_apply(kkt, f, g, variant):
    u, p, residual = kkt.solve(f, g)
    # saddle solver uses +B^T p in the momentum row; the projector's
    # momentum form subtracts the pressure term, so flip the sign back
    return FortinResult(z=u, p=-p, solve_residual=residual, variant=variant)


def fortin_l2(sys: StokesSystem, fld, kkt=None):
    """L2-Stokes Fortin projection of an analytic field (momentum in L2)."""
    if not fld.boundary_compatible:
        raise ValueError("field must vanish on the boundary")
    if kkt is None:
        kkt = _fortin_kkt(sys, "l2")
    f = assemble_field_loads(sys, fld, "l2")
    g = assemble_field_loads(sys, fld, "div")
    return _fortin_apply(kkt, f, g, "l2")


def fortin_h1(sys: StokesSystem, fld, kkt=None):
    """H1-Stokes Fortin projection of an analytic field (momentum in H1)."""
    if not fld.boundary_compatible:
        raise ValueError("field must vanish on the boundary")
    if fld.gradient is None:
        raise ValueError("h1 variant requires the field's gradient callback")
    if kkt is None:
        kkt = _fortin_kkt(sys, "h1")
    f = assemble_field_loads(sys, fld, "h1")
    g = assemble_field_loads(sys, fld, "div")
    return _fortin_apply(kkt, f, g, "h1")


def fortin_discrete(sys: StokesSystem, u_free, variant: str, kkt=None):
    """Fortin projection of a discrete velocity function (exact lift: the
    loads of a member of the space are matrix products)."""
    u_free = np.asarray(u_free, dtype=float)
    if kkt is None:
        kkt = _fortin_kkt(sys, variant)
    inner = sys.Mv if variant == "l2" else sys.A
    f = inner @ u_free
    g = sys.B @ u_free
    return _fortin_apply(kkt, f, g, variant)


def fortin_diagnostics(sys: StokesSystem, fld, result: FortinResult, kkt=None):
    """Orthogonality residual, L2 error, H1-seminorm ratio, and idempotence
    gap of a Fortin projection result.

    fld is the AnalyticField the result was produced from, or a free-dof
    coefficient vector for discrete inputs.
    """
    if kkt is None:
        kkt = _fortin_kkt(sys, result.variant)
    z = result.z
    discrete = isinstance(fld, np.ndarray)
    if discrete:
        u = np.asarray(fld, dtype=float)
        g = sys.B @ u
        diff = u - z
        l2_error = np.sqrt(max(float(diff @ (sys.Mv @ diff)), 0.0))
        in_h1semi = np.sqrt(max(float(u @ (sys.A @ u)), 0.0))
    else:
        g = assemble_field_loads(sys, fld, "div")
        err = field_error_norms(sys.Xh, sys.Xh.embed(z), fld)
        l2_error = err["l2_error"]
        in_h1semi = err["field_h1semi"]
    orth = float(np.linalg.norm(sys.B @ z - g) / (np.linalg.norm(g) + 1.0))
    z_h1semi = np.sqrt(max(float(z @ (sys.A @ z)), 0.0))
    ratio = z_h1semi / in_h1semi if in_h1semi > 0 else 0.0
    again = fortin_discrete(sys, z, result.variant, kkt=kkt)
    gap_vec = again.z - z
    gap = np.sqrt(max(float(gap_vec @ (sys.Mv @ gap_vec)), 0.0))
    return {
        "orthogonality_residual": orth,
        "l2_error": l2_error,
        "h1_seminorm_ratio": ratio,
        "idempotence_gap": gap,
    }


def mean_zero(sys: StokesSystem, q):
    """Project a pressure vector onto the mass-weighted mean-zero subspace."""
    w = sys.mean_weight
    q = np.asarray(q, dtype=float)
    return q - (w @ q) / (w @ sys.ones_p) * sys.ones_p


def verfurth_gap(sys: StokesSystem, q, a_factor=None):
    """Both sides of the perturbed inf-sup bound
    c ||q|| <= sup (div v, q)/||grad v|| + h ||grad q||.

    Returns l2_norm, sup_term = sqrt(q^T B A^{-1} B^T q), and
    grad_term = h_max ||grad q||; q is mean-zero projected if needed.
    """
    if a_factor is None:
        a_factor = la.factor_spd(sys.A)
    q = mean_zero(sys, q)
    l2 = np.sqrt(max(float(q @ (sys.Mp @ q)), 0.0))
    bt_q = sys.B.T @ q
    sup_term = np.sqrt(max(float(bt_q @ a_factor.solve(bt_q)), 0.0))
    grad_term = sys.metrics.h_max * np.sqrt(max(float(q @ (sys.Kp @ q)), 0.0))
    return {"l2_norm": l2, "sup_term": sup_term, "grad_term": grad_term}


def verfurth_fit(sys: StokesSystem, n_probes: int = 200, seed: int = 42):
    """Fitted stability constant: min over seeded random mean-zero probes of
    (sup_term + grad_term) / l2_norm."""
    rng = np.random.default_rng(seed)
    a_factor = la.factor_spd(sys.A)
    best = np.inf
    for _ in range(n_probes):
        q = rng.standard_normal(sys.Mh.dim_total)
        rec = verfurth_gap(sys, q, a_factor=a_factor)
        if rec["l2_norm"] > 0:
            best = min(best, (rec["sup_term"] + rec["grad_term"]) / rec["l2_norm"])
    return best


class _FactoredOp:
    """Forward apply of a sparse matrix with its factorization as exact inverse."""

    def __init__(self, matrix, factorization):
        self.matrix = matrix
        self.factorization = factorization

    def apply(self, x):
        return self.matrix @ x

    def solve(self, r):
        return self.factorization.solve(r)


def inverse_constants(sys: StokesSystem):
    """Inverse-inequality constants h * sqrt(lambda_max(H1 Gram, L2 Gram))
    for the velocity and pressure spaces."""
    h = sys.metrics.h_max
    out = []
    for l2_gram, h1_gram in (
        (sys.Mv, (sys.Mv + sys.A).tocsr()),
        (sys.Mp, (sys.Mp + sys.Kp).tocsr()),
    ):
        # lambda_max(H1, L2) = 1 / lambda_min(L2, H1); the reversed pencil's
        # operator is the mass Gram, whose factorization is the exact inverse
        op = _FactoredOp(l2_gram, la.factor_spd(l2_gram))
        res = la.smallest_eigs(op, h1_gram, [], k=1, tol=1e-8)
        lam_min = float(res.eigenvalues[0])
        out.append(h * np.sqrt(1.0 / lam_min))
    return out[0], out[1]


def compute_report(sys: StokesSystem, level: int, eps_grid=()) -> InfSupReport:
    """All constants of one assembled system; weighted ones per eps in eps_grid."""
    beta, beta_mode = lbb_constant(sys)
    c_glbb, glbb_mode = glbb_constant(sys)
    weighted = []
    modes = {"lbb": beta_mode, "glbb": glbb_mode}
    for eps in eps_grid:
        c_eps, mode = weighted_constant(sys, eps)
        weighted.append((eps, c_eps))
        modes[f"weighted_{eps:g}"] = mode
    c_inv_v, c_inv_p = inverse_constants(sys)
    return InfSupReport(
        level=level,
        h=sys.metrics.h_max,
        beta_lbb=beta,
        c_glbb=c_glbb,
        weighted=tuple(weighted),
        c_inv_velocity=c_inv_v,
        c_inv_pressure=c_inv_p,
        worst_modes=modes,
    )
