"""Linear solvers: ILUT-preconditioned GMRES, projected CG, and a small
dense eigensolver for products of an SPD and a symmetric matrix."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

ILUT_FILL = 10.0
ILUT_DROP = 1e-4
GMRES_RESTART = 50


@dataclass
class KrylovReport:
    iterations: int
    residual: float
    converged: bool


class SolverError(RuntimeError):
    pass


def _relres(A, x, b):
    nb = np.linalg.norm(b)
    r = np.linalg.norm(b - A @ x)
    return r / nb if nb > 0 else r


class IlutGmres:
    """GMRES with an incomplete-LU preconditioner that can be reused across
    right-hand sides of the same matrix."""

    def __init__(self, A: sp.spmatrix, fill: float = ILUT_FILL, drop: float = ILUT_DROP,
                 restart: int = GMRES_RESTART):
        if A.shape[0] != A.shape[1]:
            raise ValueError("matrix must be square")
        self.A = sp.csr_matrix(A)
        self.restart = restart
        ilu = spla.spilu(sp.csc_matrix(A), drop_tol=drop, fill_factor=fill)
        self.M = spla.LinearOperator(A.shape, ilu.solve)

    def solve(self, b: np.ndarray, tol: float = 1e-10, max_iters: int = 500, x0=None):
        b = np.asarray(b, float)
        if b.shape != (self.A.shape[0],):
            raise ValueError(f"rhs has shape {b.shape}, matrix is {self.A.shape}")
        if not np.any(b):
            return np.zeros_like(b), KrylovReport(0, 0.0, True)
        count = [0]

        def cb(_):
            count[0] += 1

        x = np.zeros_like(b) if x0 is None else np.array(x0, float)
        res = _relres(self.A, x, b)
        # scipy's stopping test is on the preconditioned system; re-check the true residual
        for _ in range(3):
            if res <= tol or count[0] >= max_iters:
                break
            cycles = max(1, -(-(max_iters - count[0]) // self.restart))
            x, _info = spla.gmres(self.A, b, x0=x, rtol=0.1 * tol, atol=0.0, restart=self.restart,
                                  maxiter=cycles, M=self.M, callback=cb, callback_type="pr_norm")
            res = _relres(self.A, x, b)
        return x, KrylovReport(max(count[0], 1), res, bool(res <= tol))


class DirectSolver:
    """Sparse LU; same interface as IlutGmres."""

    def __init__(self, A: sp.spmatrix, **_):
        self.A = sp.csr_matrix(A)
        self.lu = spla.splu(sp.csc_matrix(A))

    def solve(self, b, tol: float = 1e-10, max_iters: int = 1, x0=None):
        b = np.asarray(b, float)
        x = self.lu.solve(b)
        res = _relres(self.A, x, b)
        return x, KrylovReport(1, res, bool(res <= max(tol, 1e-12)))


def gmres_ilut(A, b, tol=1e-10, restart=GMRES_RESTART, max_iters=500, ilut_fill=ILUT_FILL,
               ilut_drop=ILUT_DROP):
    """Solve Ax = b; returns (x, KrylovReport). Non-convergence is reported, not raised."""
    return IlutGmres(A, fill=ilut_fill, drop=ilut_drop, restart=restart).solve(b, tol, max_iters)


def pcg(A, b, tol=1e-12, max_iters=None, x0=None, project=False):
    """Jacobi-preconditioned CG.

    With ``project`` the iteration runs on the complement of the constant
    vector: b, the residual and the preconditioned residual are all made
    zero-mean every step, so a singular Neumann matrix can be used as is.
    """
    A = sp.csr_matrix(A)
    n = A.shape[0]
    max_iters = max_iters or 10 * n
    dinv = 1.0 / A.diagonal()

    def P(v):
        return v - v.mean() if project else v

    b = P(np.asarray(b, float))
    nb = np.linalg.norm(b)
    x = np.zeros(n) if x0 is None else P(np.array(x0, float))
    if nb == 0.0:
        return np.zeros(n), KrylovReport(0, 0.0, True)
    r = P(b - A @ x)
    z = P(dinv * r)
    d = z.copy()
    rz = r @ z
    it = 0
    res = np.linalg.norm(r) / nb
    while res > tol and it < max_iters:
        Ad = A @ d
        a = rz / (d @ Ad)
        x += a * d
        r = P(r - a * Ad)
        it += 1
        res = np.linalg.norm(r) / nb
        z = P(dinv * r)
        rz_new = r @ z
        d = z + (rz_new / rz) * d
        rz = rz_new
    x = P(x)
    res = np.linalg.norm(P(b - A @ x)) / nb
    return x, KrylovReport(it, res, bool(res <= tol * 1.01))


def cg_neumann(G, b, tol=1e-10, x0=None):
    """Solve the pure-Neumann system G phi = b - mean(b) with mean(phi) = 0."""
    G = sp.csr_matrix(G)
    asym = abs(G - G.T).max() if G.nnz else 0.0
    if asym > 1e-12 * max(abs(G).max(), 1e-300):
        raise ValueError(f"G is not symmetric (max asymmetry {asym:.3e})")
    return pcg(G, b, tol=tol, x0=x0, project=True)


def dense_eigs_spd_similar(P: np.ndarray, D: np.ndarray) -> np.ndarray:
    """Ascending eigenvalues of P @ D via the similar symmetric matrix L^T D L (P = L L^T)."""
    P = np.asarray(P, float)
    D = np.asarray(D, float)
    try:
        L = np.linalg.cholesky(0.5 * (P + P.T))
    except np.linalg.LinAlgError as exc:
        raise ValueError("P is not symmetric positive definite") from exc
    C = L.T @ (0.5 * (D + D.T)) @ L
    C = 0.5 * (C + C.T)
    lam, V = sla.eigh(C)
    scale = max(np.abs(C).max(), 1e-300)
    if np.abs(C @ V - V * lam).max() > 1e-10 * scale * max(1, len(lam)):
        raise SolverError("symmetric eigen-decomposition failed its reconstruction check")
    return lam
