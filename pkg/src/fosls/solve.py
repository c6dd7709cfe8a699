"""Solvers for symmetric positive definite and constrained (saddle-point) systems."""

from dataclasses import dataclass

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla


class SolverError(RuntimeError):
    """Breakdown of a linear solve (indefinite matrix, rank deficiency, no convergence)."""


@dataclass(frozen=True)
class SolveOptions:
    method: str = "direct_cholesky"
    tol: float = 1e-12
    maxiter: int = 20000

    def __post_init__(self):
        if self.method not in ("direct_cholesky", "pcg"):
            raise ValueError(f"unknown method {self.method!r}")
        if not 0.0 < self.tol <= 1e-6:
            raise ValueError("tolerance must lie in (0, 1e-6]")


class SPDFactor:
    """Sparse symmetric factorisation A = P^T L D L^T P with minimum-degree ordering.

    SuperLU is run in symmetric mode (diagonal pivots only, ordering on
    A^T + A), so the pivots are those of an LDL^T factorisation and a
    non-positive pivot certifies that A is not positive definite.
    """

    def __init__(self, A):
        A = sp.csc_matrix(A)
        self.shape = A.shape
        try:
            self._lu = spla.splu(
                A,
                permc_spec="MMD_AT_PLUS_A",
                diag_pivot_thresh=0.0,
                options={"SymmetricMode": True},
            )
        except RuntimeError as exc:
            raise SolverError(f"factorisation failed: {exc}") from exc
        piv = self._lu.U.diagonal()
        bad = np.nonzero(~(piv > 0.0))[0]
        if len(bad):
            k = int(bad[0])
            raise SolverError(f"matrix is not positive definite: pivot {k} = {piv[k]:.3e}")
        self.pivots = piv

    def solve(self, b):
        return self._lu.solve(np.asarray(b, dtype=float))


def pcg(A, b, tol=1e-12, maxiter=20000, x0=None):
    """Jacobi-preconditioned conjugate gradients; raises on negative curvature.

    ``A`` may be a sparse or dense matrix, or a ``LinearOperator`` (then no
    preconditioner is used).
    """
    if isinstance(A, spla.LinearOperator):
        Minv = np.ones(A.shape[0])
    else:
        d = A.diagonal() if sp.issparse(A) else np.diag(A)
        if np.any(d <= 0):
            raise SolverError("non-positive diagonal entry: matrix is not positive definite")
        Minv = 1.0 / d
    x = np.zeros_like(b, dtype=float) if x0 is None else np.array(x0, dtype=float)
    r = b - A @ x
    bn = np.linalg.norm(b)
    if bn == 0.0:
        return np.zeros_like(b, dtype=float)
    z = Minv * r
    p = z.copy()
    rz = r @ z
    for it in range(maxiter):
        if np.linalg.norm(r) <= tol * bn:
            return x
        Ap = A @ p
        curv = p @ Ap
        if curv <= 0.0:
            raise SolverError(f"negative curvature detected at iteration {it}: p^T A p = {curv:.3e}")
        a = rz / curv
        x += a * p
        r -= a * Ap
        z = Minv * r
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise SolverError(f"PCG did not reach relative residual {tol:g} in {maxiter} iterations")


def solve_spd(A, b, opts=None):
    """Solve A x = b for SPD A; ||A x - b|| <= tol ||b|| is checked on return."""
    opts = opts or SolveOptions()
    b = np.asarray(b, dtype=float)
    if opts.method == "pcg":
        x = pcg(A, b, opts.tol, opts.maxiter)
    else:
        fac = SPDFactor(A)
        x = fac.solve(b)
        bn = np.linalg.norm(b)
        # a few steps of iterative refinement bring the residual to the tolerance
        for _ in range(3):
            r = b - A @ x
            if np.linalg.norm(r) <= opts.tol * bn:
                break
            x = x + fac.solve(r)
    return x


def solve_saddle(M, B, f, g, opts=None, dense_limit=6000):
    """Solve [[M, B^T], [B, 0]] [x; lam] = [f; g] by the Schur complement on lam.

    ``M`` must be SPD; ``B`` (m x n) must have full row rank.  With m = 0 this
    reduces to :func:`solve_spd`.  For m <= ``dense_limit`` the Schur
    complement S = B M^{-1} B^T is formed and Cholesky-factorised (a failed
    factorisation signals a rank-deficient B); otherwise CG is run on S.

    Returns
    -------
    x : ndarray
    lam : ndarray
    """
    opts = opts or SolveOptions()
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    m = B.shape[0]
    fac = SPDFactor(M)
    y = fac.solve(f)
    if m == 0:
        return y, np.zeros(0)
    B = sp.csr_matrix(B)
    rhs = B @ y - g
    if m <= dense_limit:
        W = fac.solve(B.T.toarray())
        S = B @ W
        S = 0.5 * (S + S.T)
        scale = np.sqrt(np.abs(np.diag(S)).max())
        try:
            c = la.cho_factor(S, lower=True)
        except la.LinAlgError as exc:
            raise SolverError(f"rank-deficient constraint block: {exc}") from exc
        dmin = np.min(np.abs(np.diag(c[0])))
        if dmin < 1e-10 * scale:
            raise SolverError(f"rank-deficient constraint block: Cholesky pivot {dmin:.3e}")
        lam = la.cho_solve(c, rhs)
        lam += la.cho_solve(c, rhs - S @ lam)
    else:
        op = spla.LinearOperator((m, m), matvec=lambda v: B @ fac.solve(B.T @ v), dtype=float)
        lam = pcg(op, rhs, tol=opts.tol * 1e-1, maxiter=opts.maxiter)
    x = fac.solve(f - B.T @ lam)
    return x, lam
