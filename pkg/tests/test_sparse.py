import numpy as np
import pytest
import scipy.linalg as sla
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from iterproj.sparse import (DirectSolver, IlutGmres, cg_neumann, dense_eigs_spd_similar,
                             gmres_ilut, pcg)


def random_nonsymmetric(n, rng, density=0.05):
    A = sp.random(n, n, density=density, random_state=rng, format="csr")
    return (A + sp.diags(np.abs(A).sum(axis=1).A1 + 1.0)).tocsr()


@given(st.integers(0, 10_000))
@settings(max_examples=10, deadline=None)
def test_gmres_matches_dense_lu(seed):
    rng = np.random.default_rng(seed)
    A = random_nonsymmetric(120, rng)
    b = rng.standard_normal(120)
    x, rep = gmres_ilut(A, b, tol=1e-12)
    assert rep.converged
    assert np.allclose(x, sla.lu_solve(sla.lu_factor(A.toarray()), b), rtol=1e-9, atol=1e-10)


def test_gmres_on_momentum_operator(disc2):
    cons = disc2.constrained(disc2.matrices.momentum(1e-3, 1.0))
    b = np.arange(disc2.n_velocity, dtype=float)
    x, rep = cons.solve(b, tol=1e-12)
    xd, _ = DirectSolver(cons.Ac).solve(cons.rhs(b))
    assert rep.converged and np.allclose(x, xd, atol=1e-10)


def test_gmres_zero_rhs_and_shape():
    A = sp.identity(4, format="csr")
    x, rep = IlutGmres(A).solve(np.zeros(4))
    assert rep.converged and not x.any()
    with pytest.raises(ValueError):
        IlutGmres(A).solve(np.zeros(3))
    with pytest.raises(ValueError):
        IlutGmres(sp.csr_matrix(np.ones((2, 3))))


def test_pcg_spd(disc2):
    M = disc2.matrices.M
    b = np.linspace(-1, 2, M.shape[0])
    x, rep = pcg(M, b, tol=1e-13)
    assert rep.converged
    assert np.allclose(x, np.linalg.solve(M.toarray(), b), atol=1e-11)


def test_cg_neumann_projection(disc2):
    G = disc2.matrices.G
    b = np.sin(np.arange(G.shape[0]))
    phi, rep = cg_neumann(G, b, tol=1e-13)
    assert rep.converged
    assert abs(phi.mean()) < 1e-14
    assert np.allclose(G @ phi, b - b.mean(), atol=1e-11)
    # dual route: least-squares solution of the singular system
    ref = np.linalg.lstsq(G.toarray(), b - b.mean(), rcond=None)[0]
    assert np.allclose(phi, ref - ref.mean(), atol=1e-10)


def test_cg_neumann_rejects_nonsymmetric():
    with pytest.raises(ValueError, match="symmetric"):
        cg_neumann(sp.csr_matrix(np.array([[1.0, 2.0], [0.0, 1.0]])), np.ones(2))


@given(st.integers(0, 10_000), st.integers(2, 12))
@settings(max_examples=25, deadline=None)
def test_similar_eigs_match_general_eigensolver(seed, n):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, n))
    P = X @ X.T + n * np.eye(n)
    Y = rng.standard_normal((n, n))
    D = Y + Y.T
    lam = dense_eigs_spd_similar(P, D)
    ref = np.sort(sla.eigvals(P @ D).real)
    assert np.allclose(lam, ref, rtol=1e-9, atol=1e-9 * np.abs(ref).max())


def test_similar_eigs_requires_spd():
    with pytest.raises(ValueError):
        dense_eigs_spd_similar(-np.eye(3), np.eye(3))
