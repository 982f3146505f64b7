"""Sparse symmetric matrices, direct factorizations, saddle-point solves,
and a deflated smallest-generalized-eigenvalue solver with a dense oracle.

All factorizations are immutable after construction; their solve methods are
reentrant.  The eigensolver is blocked inverse iteration on the pencil
S x = lambda M x with M-orthogonalization against deflation vectors and
Rayleigh-quotient locking of converged pairs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

DENSE_ORACLE_MAX_DIM = 600

EIG_MAX_ITER = 500
EIG_BLOCK_SIZE = 3
EIG_VALUE_RTOL = 1e-9


class IndefiniteMatrixError(ValueError):
    """Matrix failed the positive-definiteness check during factorization."""

    def __init__(self, message, pivot=None):
        super().__init__(message)
        self.pivot = pivot


class RankDeficiencyError(ValueError):
    """Saddle system is singular (e.g. unconstrained pressure kernel)."""


class EigenConvergenceError(RuntimeError):
    """Eigensolver hit the iteration cap; carries the best residuals achieved."""

    def __init__(self, message, best_residuals=None):
        super().__init__(message)
        self.best_residuals = best_residuals


def check_symmetric(matrix) -> bool:
    """Exact (bitwise) symmetry check for a sparse matrix."""
    diff = (matrix - matrix.T).tocoo()
    return diff.nnz == 0 or np.all(diff.data == 0.0)


def _as_csc(matrix):
    if not sp.issparse(matrix):
        matrix = sp.csc_matrix(matrix)
    return matrix.tocsc()


@dataclass(frozen=True)
class Factorization:
    """Direct factorization of a sparse symmetric positive definite matrix.

    Solving and multiplying back reproduces the right-hand side to a
    relative residual of 1e-10 or better.  inertia = (positive, negative,
    zero) pivot counts from the static-pivot elimination.
    """

    matrix: sp.csc_matrix
    lu: object
    inertia: tuple

    @property
    def shape(self):
        return self.matrix.shape

    def solve(self, rhs):
        return self.lu.solve(np.asarray(rhs, dtype=float))


def factor_spd(matrix) -> Factorization:
    """Factor a sparse symmetric positive definite matrix.

    Uses a fill-reducing symmetric ordering with static diagonal pivoting so
    the elimination diagonal exposes the inertia; any non-positive pivot is
    reported with the index where it was detected.
    """
    A = _as_csc(matrix)
    if A.shape[0] != A.shape[1]:
        raise ValueError("matrix must be square")
    if not check_symmetric(A):
        raise ValueError("matrix must be symmetric")
    diag = A.diagonal()
    bad = np.flatnonzero(diag <= 0.0)
    if bad.size:
        raise IndefiniteMatrixError(
            f"indefinite/singular at pivot {bad[0]}: non-positive diagonal entry",
            pivot=int(bad[0]),
        )
    try:
        lu = spla.splu(
            A,
            permc_spec="MMD_AT_PLUS_A",
            diag_pivot_thresh=0.0,
            options=dict(SymmetricMode=True),
        )
    except RuntimeError as exc:
        raise IndefiniteMatrixError(
            f"indefinite/singular at pivot (elimination failed: {exc})"
        ) from exc
    u_diag = lu.U.diagonal()
    n_pos = int(np.sum(u_diag > 0.0))
    n_neg = int(np.sum(u_diag < 0.0))
    n_zero = u_diag.size - n_pos - n_neg
    if n_neg or n_zero:
        k = int(np.flatnonzero(u_diag <= 0.0)[0])
        raise IndefiniteMatrixError(
            f"indefinite/singular at pivot {k}: non-positive elimination pivot",
            pivot=k,
        )
    return Factorization(matrix=A, lu=lu, inertia=(n_pos, n_neg, n_zero))


class SaddleFactorization:
    """LU factorization of the bordered KKT matrix [[A, B^T], [B, 0]].

    When mean_weight is given, a scalar multiplier row enforcing
    mean_weight . p = 0 is appended, which removes the constant-pressure
    kernel (mass-matrix-weighted zero mean).
    """

    def __init__(self, A_block, B_block, mean_weight=None):
        A = _as_csc(A_block)
        B = _as_csc(B_block)
        self.n_u = A.shape[0]
        self.n_p = B.shape[0]
        self.constrained = mean_weight is not None
        if self.constrained:
            m = sp.csc_matrix(np.asarray(mean_weight, dtype=float).reshape(-1, 1))
            blocks = [[A, B.T, None], [B, None, m], [None, m.T, None]]
        else:
            blocks = [[A, B.T], [B, None]]
        self.kkt = sp.bmat(blocks, format="csc")
        try:
            self.lu = spla.splu(self.kkt)
        except RuntimeError as exc:
            raise RankDeficiencyError(f"rank deficiency in saddle system: {exc}") from exc

    def solve(self, f, g):
        """Solve A u + B^T p = f, B u = g; returns (u, p, relative residual)."""
        f = np.asarray(f, dtype=float)
        g = np.asarray(g, dtype=float)
        single = f.ndim == 1
        F = f.reshape(self.n_u, -1)
        G = g.reshape(self.n_p, -1)
        ncol = F.shape[1]
        pad = np.zeros((1, ncol)) if self.constrained else np.zeros((0, ncol))
        rhs = np.vstack([F, G, pad])
        x = self.lu.solve(rhs)
        # one step of iterative refinement keeps near-singular systems honest
        x += self.lu.solve(rhs - self.kkt @ x)
        u = x[: self.n_u]
        p = x[self.n_u : self.n_u + self.n_p]
        scale = np.linalg.norm(f) + np.linalg.norm(g) + 1.0
        A = self.kkt[: self.n_u, : self.n_u]
        Bt = self.kkt[: self.n_u, self.n_u : self.n_u + self.n_p]
        res = np.linalg.norm(A @ u + Bt @ p - F) + np.linalg.norm(Bt.T @ u - G)
        residual = float(res / scale)
        if single:
            return u[:, 0], p[:, 0], residual
        return u, p, residual

    def solve_schur(self, r):
        """Solve (B A^{-1} B^T) p = r on the constrained pressure space."""
        r = np.asarray(r, dtype=float)
        single = r.ndim == 1
        R = r.reshape(self.n_p, -1)
        f = np.zeros((self.n_u, R.shape[1]))
        _, p, _ = self.solve(f, -R)
        return p[:, 0] if single else p


def solve_saddle(A_block, B_block, f, g, pressure_mean_constraint=False, mean_weight=None):
    """One-shot saddle solve; see SaddleFactorization for the contract."""
    if pressure_mean_constraint and mean_weight is None:
        raise ValueError("pressure_mean_constraint=True requires mean_weight")
    fact = SaddleFactorization(
        A_block, B_block, mean_weight=mean_weight if pressure_mean_constraint else None
    )
    return fact.solve(f, g)


class SchurOperator:
    """The pressure Schur complement x -> B W^{-1} B^T x of an SPD inner Gram W.

    apply() uses the SPD factorization of W; solve() applies the exact
    inverse through the bordered KKT factorization, which is what makes
    inverse iteration on the inf-sup pencils cheap.
    """

    def __init__(self, B_block, inner_factor, kkt=None):
        self.B = B_block.tocsr() if sp.issparse(B_block) else sp.csr_matrix(B_block)
        self.inner = inner_factor
        self.kkt = kkt
        self.shape = (self.B.shape[0], self.B.shape[0])

    def apply(self, x):
        return self.B @ self.inner.solve(self.B.T @ x)

    def solve(self, r):
        if self.kkt is None:
            raise ValueError("no KKT factorization attached")
        return self.kkt.solve_schur(r)


def _matmul(operator, x):
    if callable(operator) and not hasattr(operator, "__matmul__"):
        return operator(x)
    return operator @ x


def _deflation_projector(M, deflation):
    """Projector removing the deflation span, in the M inner product.

    Falls back to Euclidean projection when the deflation vectors are
    M-degenerate (e.g. constants against a stiffness Gram): the Rayleigh
    quotient is invariant under shifts along such kernel directions, so the
    computed eigenvalues are unaffected.
    """
    if not deflation:
        return lambda x: x
    D = np.column_stack([np.asarray(d, dtype=float) for d in deflation])
    MD = _matmul(M, D)
    gram = D.T @ MD
    gram = 0.5 * (gram + gram.T)
    # absolute scale of M from a fixed probe, so that kernel directions
    # (e.g. constants against a stiffness Gram) are detected reliably
    probe = np.cos(np.arange(D.shape[0], dtype=float))
    m_scale = np.linalg.norm(_matmul(M, probe)) / np.linalg.norm(probe)
    col_sq = np.einsum("ij,ij->j", D, D)
    degenerate = np.any(np.diag(gram) <= 1e-10 * m_scale * col_sq)
    if not degenerate:
        L = scipy.linalg.cho_factor(gram)

        def project(x):
            return x - D @ scipy.linalg.cho_solve(L, MD.T @ x)

        return project
    Q, _ = np.linalg.qr(D)

    def project_euclid(x):
        return x - Q @ (Q.T @ x)

    return project_euclid


def _m_orthonormalize(X, m_apply, against=None, m_against=None, max_tries=3):
    """Gram-Schmidt in the M inner product; X is modified column-block-wise."""
    if against is not None and against.shape[1]:
        X = X - against @ (m_against.T @ X)
    for _ in range(max_tries):
        MX = m_apply(X)
        gram = X.T @ MX
        gram = 0.5 * (gram + gram.T)
        try:
            L = np.linalg.cholesky(gram)
        except np.linalg.LinAlgError:
            jitter = 1e-14 * np.trace(gram) / max(gram.shape[0], 1)
            try:
                L = np.linalg.cholesky(gram + jitter * np.eye(gram.shape[0]))
            except np.linalg.LinAlgError:
                raise EigenConvergenceError("block became M-rank-deficient")
        X = scipy.linalg.solve_triangular(L, X.T, lower=True).T
        gram_check = X.T @ m_apply(X)
        if np.max(np.abs(gram_check - np.eye(X.shape[1]))) < 1e-10:
            return X
    return X


def _cg_solve(apply_op, rhs, project, rtol=1e-13, max_iter=10000):
    """Plain conjugate gradients restricted to the projected subspace."""
    x = np.zeros_like(rhs)
    r = project(rhs.copy())
    p = r.copy()
    rs = r @ r
    bnorm = np.sqrt(rs)
    if bnorm == 0.0:
        return x
    for _ in range(max_iter):
        Ap = project(apply_op(p))
        alpha = rs / (p @ Ap)
        x += alpha * p
        r -= alpha * Ap
        rs_new = r @ r
        if np.sqrt(rs_new) <= rtol * bnorm:
            break
        p = r + (rs_new / rs) * p
        rs = rs_new
    return x


def smallest_eigs(apply_S, M, deflation, k, tol=1e-8, max_iter=EIG_MAX_ITER, seed=0):
    """Smallest k eigenvalues of S x = lambda M x on the deflated subspace.

    apply_S is either a callable x -> S x or an object with .apply (and
    optionally .solve for the exact inverse; otherwise inner CG is used).
    M may be sparse, dense, or any object supporting @.  Deflation vectors
    span kernel directions excluded by M-orthogonal (or, for M-degenerate
    directions, Euclidean) projection.

    Returns an EigResult with ascending eigenvalues, M-orthonormal
    eigenvectors, and per-pair residual norms
    ||S x - lambda M x|| / (||S x|| + lambda ||M x||).
    """
    if hasattr(apply_S, "apply"):
        op_apply = apply_S.apply
        op_solve = getattr(apply_S, "solve", None)
    else:
        op_apply = apply_S
        op_solve = None

    def m_apply(x):
        return _matmul(M, x)

    n = M.shape[0]
    project = _deflation_projector(M, deflation)
    if op_solve is None:
        def op_solve(R):
            cols = [_cg_solve(op_apply, R[:, j], project) for j in range(R.shape[1])]
            return np.column_stack(cols)

    n_defl = len(deflation) if deflation else 0
    block = min(max(k + 2, EIG_BLOCK_SIZE), n - n_defl)
    if block < k:
        raise ValueError("deflated subspace smaller than requested eigenvalue count")

    rng = np.random.default_rng(seed)
    locked_X = np.empty((n, 0))
    locked_MX = np.empty((n, 0))
    locked_vals = []
    locked_res = []

    X = project(rng.standard_normal((n, block)))
    X = _m_orthonormalize(X, m_apply)
    prev = None
    best_res = None

    for _ in range(max_iter):
        SX = np.column_stack([op_apply(X[:, j]) for j in range(X.shape[1])])
        H = X.T @ SX
        H = 0.5 * (H + H.T)
        theta, Q = np.linalg.eigh(H)
        X = X @ Q
        SX = SX @ Q
        MX = m_apply(X)
        R = SX - MX * theta[None, :]
        denom = (
            np.linalg.norm(SX, axis=0)
            + np.abs(theta) * np.linalg.norm(MX, axis=0)
            + 1e-300
        )
        res = np.linalg.norm(R, axis=0) / denom
        best_res = res if best_res is None else np.minimum(best_res, res)

        stable = prev is not None and abs(theta[0] - prev) <= EIG_VALUE_RTOL * max(
            abs(theta[0]), 1e-300
        )
        if stable and res[0] <= tol:
            # Rayleigh-quotient locking: freeze the converged pair, shrink the block
            locked_X = np.hstack([locked_X, X[:, :1]])
            locked_MX = np.hstack([locked_MX, MX[:, :1]])
            locked_vals.append(theta[0])
            locked_res.append(res[0])
            if len(locked_vals) == k:
                break
            X = X[:, 1:]
            prev = None
            want = min(
                max(k - len(locked_vals) + 2, EIG_BLOCK_SIZE),
                n - n_defl - len(locked_vals),
            )
            while X.shape[1] < want:
                X = np.hstack([X, project(rng.standard_normal((n, 1)))])
            X = _m_orthonormalize(X, m_apply, against=locked_X, m_against=locked_MX)
            continue
        prev = theta[0]

        Y = op_solve(MX)
        Y = project(Y)
        Y = _m_orthonormalize(Y, m_apply, against=locked_X, m_against=locked_MX)
        X = Y
    else:
        raise EigenConvergenceError(
            f"no convergence after {max_iter} iterations; "
            f"best residuals {np.array2string(best_res, precision=3)}",
            best_residuals=best_res,
        )

    values = np.array(locked_vals)
    vectors = locked_X
    residuals = np.array(locked_res)
    return EigResult(eigenvalues=values, eigenvectors=vectors, residual_norms=residuals)


@dataclass(frozen=True)
class EigResult:
    """Ascending generalized eigenvalues with M-orthonormal eigenvectors."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    residual_norms: np.ndarray


def dense_eig_oracle(S, M, deflation=()):
    """Full ascending spectrum of the deflated pencil by congruence reduction.

    Brute-force ground truth for tests; guarded to dimension <= 600.
    """
    S = np.asarray(S, dtype=float)
    M = np.asarray(M, dtype=float)
    n = S.shape[0]
    if n > DENSE_ORACLE_MAX_DIM:
        raise ValueError(
            f"dense oracle dimension guard: {n} > {DENSE_ORACLE_MAX_DIM}"
        )
    if len(deflation):
        D = np.column_stack([np.asarray(d, dtype=float) for d in deflation])
        MD = M @ D
        m_scale = np.linalg.norm(M, ord=2)
        col_ok = np.einsum("ij,ij->j", D, MD) > 1e-10 * m_scale * np.einsum(
            "ij,ij->j", D, D
        )
        Z = scipy.linalg.null_space(MD.T if np.all(col_ok) else D.T)
    else:
        Z = np.eye(n)
    Ss = Z.T @ S @ Z
    Ms = Z.T @ M @ Z
    Ss = 0.5 * (Ss + Ss.T)
    Ms = 0.5 * (Ms + Ms.T)
    vals = scipy.linalg.eigh(Ss, Ms, eigvals_only=True)
    return np.sort(vals)
